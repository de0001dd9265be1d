// Discrete realizations of A.D on regular grids with an exactly adjoint
// divergence.
//
// apply() takes forward differences of the node field into the staggered
// cells (averaging transversally in 2d) and projects by A. adjoint_div() is
// the exact negative transpose under the weighted inner products of grid.hpp:
//
//   <apply(u), z>_cells + <u, adjoint_div(z)>_nodes = boundary term,
//
// identically zero for Neumann fields and equal to boundary_pairing(z, u)
// when z carries a normal trace. The identity holds to rounding because the
// adjoint is assembled from the same stencil coefficients.
#pragma once

#include <stdexcept>

#include "lgflow/grid.hpp"
#include "lgflow/integrand.hpp"
#include "lgflow/projector.hpp"

namespace lgflow {

// The operator catalog entry: the pointwise matrix A plus its kind and the
// C-ellipticity predicate. The grid stencils below realize A.D and its
// adjoint for any such spec.
template <typename Scalar>
using OperatorSpec = Projector<Scalar>;

namespace detail {

template <typename Scalar>
void check_op_grid(const OperatorSpec<Scalar>& op, const Grid<Scalar>& grid, int components) {
  if (op.n != grid.dim())
    throw std::invalid_argument("operator dimension does not match grid dimension");
  if (op.m != components)
    throw std::invalid_argument("operator expects " + std::to_string(op.m) +
                                " components, field has " + std::to_string(components));
}

} // namespace detail

// forward-difference Jacobian projected by A, on staggered cells
template <typename Scalar>
DualField<Scalar> apply(const OperatorSpec<Scalar>& op, const GridFunction<Scalar>& u) {
  detail::check_op_grid(op, u.grid, u.components());
  const Grid<Scalar>& g = u.grid;
  const int m = u.components();
  const Scalar h = g.spacing();
  DualField<Scalar> z(g, m);
  MatrixX<Scalar> J(m, g.dim());
  if (g.dim() == 1) {
    for (int i = 0; i < g.shape()[0]; ++i) {
      J.col(0) = (u.values.col(i + 1) - u.values.col(i)) / h;
      z.set_cell_matrix(i, op.apply(J));
    }
    return z;
  }
  const int nx = g.shape()[0], ny = g.shape()[1];
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const auto u00 = u.values.col(g.node_index(i, j));
      const auto u10 = u.values.col(g.node_index(i + 1, j));
      const auto u01 = u.values.col(g.node_index(i, j + 1));
      const auto u11 = u.values.col(g.node_index(i + 1, j + 1));
      J.col(0) = (u10 - u00 + u11 - u01) / (Scalar(2) * h);
      J.col(1) = (u01 - u00 + u11 - u10) / (Scalar(2) * h);
      z.set_cell_matrix(g.cell_index(i, j), op.apply(J));
    }
  }
  return z;
}

// exact negative adjoint of apply(); with trace-carrying bc the boundary
// trace block of z is lifted into the boundary nodes
template <typename Scalar>
GridFunction<Scalar> adjoint_div(const OperatorSpec<Scalar>& op, const DualField<Scalar>& z,
                                 BoundaryCondition bc) {
  detail::check_op_grid(op, z.grid, z.m);
  const Grid<Scalar>& g = z.grid;
  const int m = z.m;
  const Scalar h = g.spacing();
  GridFunction<Scalar> out(g, m);
  MatrixX<Scalar> az(m, g.dim());
  if (g.dim() == 1) {
    for (int i = 0; i < g.shape()[0]; ++i) {
      az = op.apply(z.cell_matrix(i));
      out.values.col(i) += az.col(0) / h;
      out.values.col(i + 1) -= az.col(0) / h;
    }
  } else {
    const int nx = g.shape()[0], ny = g.shape()[1];
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        az = op.apply(z.cell_matrix(g.cell_index(i, j)));
        const VectorX<Scalar> zx = az.col(0) / (Scalar(2) * h);
        const VectorX<Scalar> zy = az.col(1) / (Scalar(2) * h);
        out.values.col(g.node_index(i, j)) += zx + zy;
        out.values.col(g.node_index(i + 1, j)) += -zx + zy;
        out.values.col(g.node_index(i, j + 1)) += zx - zy;
        out.values.col(g.node_index(i + 1, j + 1)) += -zx - zy;
      }
    }
  }
  if (bc == BoundaryCondition::TraceCarrying && z.has_trace()) {
    const Scalar vol = g.cell_volume();
    for (int fi = 0; fi < g.num_faces(); ++fi) {
      const Face<Scalar>& f = g.faces()[fi];
      out.values.col(f.node) += z.trace.col(fi) * (f.weight / vol);
    }
  }
  for (int k = 0; k < g.num_nodes(); ++k) out.values.col(k) /= g.node_weight(k);
  return out;
}

// surface sum of <v, z.nu> with face weights h^{n-1}; requires a trace
template <typename Scalar>
Scalar boundary_pairing(const OperatorSpec<Scalar>& op, const DualField<Scalar>& z,
                        const MatrixX<Scalar>& v) {
  if (!op.is_c_elliptic())
    throw std::invalid_argument("boundary_pairing: operator kind '" + to_string(op.kind) +
                                "' has no boundary trace");
  if (!z.has_trace())
    throw std::invalid_argument("boundary_pairing: dual field carries no trace block");
  if (v.rows() != z.m || v.cols() != z.grid.num_faces())
    throw std::invalid_argument("boundary_pairing: boundary data has wrong shape");
  Scalar s = 0;
  for (int fi = 0; fi < z.grid.num_faces(); ++fi)
    s += z.grid.faces()[fi].weight * v.col(fi).dot(z.trace.col(fi));
  return s;
}

// boundary values of a node field, sampled per face
template <typename Scalar>
MatrixX<Scalar> boundary_trace(const GridFunction<Scalar>& u) {
  MatrixX<Scalar> v(u.components(), u.grid.num_faces());
  for (int fi = 0; fi < u.grid.num_faces(); ++fi)
    v.col(fi) = u.values.col(u.grid.faces()[fi].node);
  return v;
}

// Power-method estimate of the operator norm of apply() between the weighted
// spaces; used to pick primal-dual step sizes.
template <typename Scalar>
Scalar operator_norm_estimate(const OperatorSpec<Scalar>& op, const Grid<Scalar>& grid,
                              int components, int iterations = 60) {
  GridFunction<Scalar> v(grid, components);
  // deterministic nonzero seed vector
  for (int k = 0; k < v.values.cols(); ++k)
    for (int r = 0; r < components; ++r)
      v.values(r, k) = Scalar(1) + std::sin(Scalar(0.7) * Scalar(k + 1) + Scalar(r));
  Scalar norm = 1;
  for (int it = 0; it < iterations; ++it) {
    DualField<Scalar> w = apply(op, v);
    GridFunction<Scalar> back = adjoint_div(op, w, BoundaryCondition::Neumann);
    // back = -A^T A v up to sign; normalize in the weighted metric
    Scalar nb = l2_norm(back);
    if (nb == Scalar(0)) return Scalar(0);
    back.values /= nb;
    norm = std::sqrt(nb);
    v = back;
  }
  return norm;
}

} // namespace lgflow
