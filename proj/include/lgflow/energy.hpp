// Primal and dual (relaxed) energies, boundary integrand, duality gaps.
//
// The admissible dual set is discretized cellwise through the finiteness of
// the conjugate, together with an L1 bound on the discrete divergence. The
// L1 ball is the quantitative stand-in for the divergence-regularity of the
// continuum dual class: without it every cell decouples and the supremum
// degenerates to the primal integral, which is wrong precisely for the
// irregular-in-x integrands. The bound is inactive for the smooth catalog
// optimizers, so those cases still reach the primal value exactly.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "lgflow/diffop.hpp"
#include "lgflow/grid.hpp"
#include "lgflow/integrand.hpp"

namespace lgflow {

template <typename Scalar>
struct SolverOptions {
  int max_iters = 40000;
  Scalar gap_tol = Scalar(1e-8);       // ascent gain stall threshold
  Scalar residual_tol = Scalar(1e-10); // relative iterate-change threshold
  // L1 divergence budget per unit of C0; <= 0 disables the budget
  Scalar div_budget_factor = Scalar(16);
  int check_interval = 50;
};

struct InadmissibleDualField : std::invalid_argument {
  explicit InadmissibleDualField(int cell)
      : std::invalid_argument("dual field has infinite conjugate at cell " +
                              std::to_string(cell)),
        offending_cell(cell) {}
  int offending_cell;
};

template <typename Scalar>
struct DirichletData {
  MatrixX<Scalar> u1; // m x num_faces boundary values
  std::optional<GridFunction<Scalar>> extension;
};

template <typename Scalar>
struct EnergyReport {
  Scalar primal = 0;
  Scalar dual = 0;
  Scalar gap = 0;
  Scalar boundary_term = 0;
  int iterations = 0;
  bool converged = false;
  DualField<Scalar> maximizer;
};

// h^n-weighted sum of f(x, A D u) over staggered cells
template <typename Scalar>
Scalar primal_energy(const Integrand<Scalar>& f, const GridFunction<Scalar>& u) {
  const OperatorSpec<Scalar>& op = f.projector();
  DualField<Scalar> au = apply(op, u);
  const Scalar vol = u.grid.cell_volume();
  Scalar s = 0;
  for (int c = 0; c < u.grid.num_cells(); ++c)
    s += f.profile(u.grid.cell_position(c), au.cell_matrix(c).norm());
  return s * vol;
}

// -sum f*(x, z) h^n + <z, A D u>, minus the boundary defect in Dirichlet mode
template <typename Scalar>
Scalar dual_energy(const Integrand<Scalar>& f, const GridFunction<Scalar>& u,
                   const DualField<Scalar>& z, BoundaryCondition bc,
                   const DirichletData<Scalar>* dirichlet = nullptr) {
  const OperatorSpec<Scalar>& op = f.projector();
  if (!u.grid.compatible(z.grid)) throw std::invalid_argument("dual_energy: grid mismatch");
  const Scalar vol = u.grid.cell_volume();
  Scalar conj_sum = 0;
  for (int c = 0; c < u.grid.num_cells(); ++c) {
    ConjugateValue<Scalar> cv = f.profile_conjugate(u.grid.cell_position(c),
                                                    op.apply(z.cell_matrix(c)).norm());
    if (!cv.finite) throw InadmissibleDualField(c);
    conj_sum += cv.value;
  }
  DualField<Scalar> au = apply(op, u);
  Scalar value = -conj_sum * vol + inner(z, au);
  if (bc == BoundaryCondition::TraceCarrying && dirichlet) {
    if (!z.has_trace())
      throw std::invalid_argument("dual_energy: Dirichlet mode needs a trace-carrying field");
    MatrixX<Scalar> v = boundary_trace(u) - dirichlet->u1;
    value -= boundary_pairing(op, z, v);
  }
  return value;
}

// h(x, v) = sup over attainable normal traces of -<z.nu, v>. For the
// ball-shaped conjugate domains of the catalog this is rho(x) |A(v x nu)|,
// the recession function at -v x nu.
template <typename Scalar>
Scalar boundary_integrand_h(const Integrand<Scalar>& f, const PointX<Scalar>& x,
                            const VectorX<Scalar>& v, const VectorX<Scalar>& nu) {
  const OperatorSpec<Scalar>& op = f.projector();
  MatrixX<Scalar> outer = v * nu.transpose();
  const Scalar rho = f.conjugate_domain_radius(x);
  const Scalar base = op.apply(outer).norm();
  if (std::isinf(rho)) {
    return base == Scalar(0) ? Scalar(0) : std::numeric_limits<Scalar>::infinity();
  }
  return rho * base;
}

namespace detail {

// project the node field p onto {sum_k omega_k |p_k| <= budget} in the
// omega-weighted metric (vector soft shrinkage with a common threshold)
template <typename Scalar>
void project_weighted_l1(GridFunction<Scalar>& p, const std::vector<Scalar>& omega,
                         Scalar budget) {
  const int n = static_cast<int>(p.values.cols());
  std::vector<Scalar> mag(n);
  Scalar total = 0;
  for (int k = 0; k < n; ++k) {
    mag[k] = p.values.col(k).norm();
    total += omega[k] * mag[k];
  }
  if (total <= budget) return;
  // water-filling for the common threshold mu
  std::vector<int> order(n);
  for (int k = 0; k < n; ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return mag[a] > mag[b]; });
  Scalar acc = 0, wacc = 0, mu = 0;
  for (int r = 0; r < n; ++r) {
    const int k = order[r];
    acc += omega[k] * mag[k];
    wacc += omega[k];
    const Scalar cand = (acc - budget) / wacc;
    const Scalar next = (r + 1 < n) ? mag[order[r + 1]] : Scalar(0);
    if (cand >= next) { mu = cand; break; }
  }
  for (int k = 0; k < n; ++k) {
    const Scalar s = mag[k] > Scalar(0) ? std::max(Scalar(0), Scalar(1) - mu / mag[k]) : Scalar(0);
    p.values.col(k) *= s;
  }
}

// cellwise prox of sigma f*(x, .) through the Moreau identity, followed by an
// exact projection onto the conjugate domain ball
template <typename Scalar>
void prox_conjugate_cellwise(const Integrand<Scalar>& f, Scalar sigma, DualField<Scalar>& z) {
  const OperatorSpec<Scalar>& op = f.projector();
  for (int c = 0; c < z.grid.num_cells(); ++c) {
    const PointX<Scalar> x = z.grid.cell_position(c);
    MatrixX<Scalar> v = op.apply(z.cell_matrix(c));
    const Scalar r = v.norm();
    Scalar t = 0;
    if (r > Scalar(0)) {
      // prox_{sigma f*}(v) = v - sigma prox_{f / sigma}(v / sigma)
      const Scalar p = f.profile_prox(x, Scalar(1) / sigma, r / sigma);
      t = r - sigma * p;
      const Scalar rho = f.conjugate_domain_radius(x);
      if (!std::isinf(rho)) t = std::min(t, rho);
      t = std::max(t, Scalar(0));
    }
    z.set_cell_matrix(c, r > Scalar(0) ? MatrixX<Scalar>((t / r) * v)
                                       : MatrixX<Scalar>::Zero(z.m, z.grid.dim()));
  }
}

// projection of a face vector onto the attainable normal-trace set
// {(A w) nu : |A w| <= rho}; closed form for the catalog projectors
template <typename Scalar>
VectorX<Scalar> project_trace_set(const OperatorSpec<Scalar>& op, const VectorX<Scalar>& nu,
                                  Scalar rho, const VectorX<Scalar>& p) {
  if (std::isinf(rho)) return p;
  switch (op.kind) {
  case OperatorKind::FullGradient: {
    const Scalar n2 = p.norm();
    return n2 <= rho ? p : VectorX<Scalar>((rho / n2) * p);
  }
  case OperatorKind::SymmetricGradient: {
    // constraint t_n^2 + 2 |t_tau|^2 <= rho^2 in the normal decomposition
    const Scalar pn = p.dot(nu);
    VectorX<Scalar> pt = p - pn * nu;
    Scalar a = pn, bnorm = pt.norm();
    if (a * a + 2 * bnorm * bnorm <= rho * rho) return p;
    Scalar mu_lo = 0, mu_hi = 1;
    auto val = [&](Scalar mu) {
      const Scalar tn = a / (1 + mu);
      const Scalar tt = bnorm / (1 + 2 * mu);
      return tn * tn + 2 * tt * tt - rho * rho;
    };
    while (val(mu_hi) > 0) mu_hi *= 2;
    for (int i = 0; i < 200; ++i) {
      const Scalar mid = (mu_lo + mu_hi) / 2;
      if (mid == mu_lo || mid == mu_hi) break;
      (val(mid) > 0 ? mu_lo : mu_hi) = mid;
    }
    const Scalar mu = (mu_lo + mu_hi) / 2;
    VectorX<Scalar> out = (a / (1 + mu)) * nu + pt / (1 + 2 * mu);
    return out;
  }
  case OperatorKind::Divergence: {
    // only reachable for n == 1 where the trace set is the rho-ball
    const Scalar n2 = p.norm();
    return n2 <= rho ? p : VectorX<Scalar>((rho / n2) * p);
  }
  }
  return p;
}

} // namespace detail

// Maximize the dual energy over the admissible set by a primal-dual ascent
// with pointwise projection onto dom f* and the L1 divergence budget. In
// trace-carrying mode the boundary trace block is iterated as well.
template <typename Scalar>
EnergyReport<Scalar> relaxed_energy(const Integrand<Scalar>& f, const GridFunction<Scalar>& u,
                                    BoundaryCondition bc,
                                    const DirichletData<Scalar>* dirichlet = nullptr,
                                    const SolverOptions<Scalar>& opts = SolverOptions<Scalar>()) {
  const OperatorSpec<Scalar>& op = f.projector();
  if (bc == BoundaryCondition::TraceCarrying) {
    if (!dirichlet) throw std::invalid_argument("relaxed_energy: Dirichlet mode needs data");
    if (!op.is_c_elliptic())
      throw std::invalid_argument("relaxed_energy: operator kind '" + to_string(op.kind) +
                                  "' does not admit Dirichlet data");
  }
  const Grid<Scalar>& g = u.grid;
  const Scalar vol = g.cell_volume();
  EnergyReport<Scalar> rep;
  rep.primal = primal_energy(f, u);

  DualField<Scalar> au = apply(op, u);
  const bool with_trace = (bc == BoundaryCondition::TraceCarrying);
  DualField<Scalar> z(g, op.m, with_trace);
  DualField<Scalar> z_prev = z;

  const bool budgeted = opts.div_budget_factor > Scalar(0) && f.has_linear_growth();
  const Scalar budget = opts.div_budget_factor * f.C0();
  GridFunction<Scalar> y(g, op.m); // multiplier for the divergence budget

  std::vector<Scalar> omega(g.num_nodes());
  for (int k = 0; k < g.num_nodes(); ++k) omega[k] = g.node_weight(k) * vol;

  const Scalar L = std::max(operator_norm_estimate(op, g, op.m), Scalar(1e-8));
  const Scalar tau = Scalar(1) / L;
  const Scalar sigma = Scalar(0.9) / (tau * L * L);
  const Scalar tau_t = Scalar(1); // boundary block is decoupled

  MatrixX<Scalar> vbd;
  if (with_trace) vbd = boundary_trace(u) - dirichlet->u1;

  Scalar last_value = -std::numeric_limits<Scalar>::infinity();
  auto dual_value = [&]() {
    Scalar cs = 0;
    for (int c = 0; c < g.num_cells(); ++c)
      cs += f.profile_conjugate(g.cell_position(c), op.apply(z.cell_matrix(c)).norm()).value;
    Scalar v = -cs * vol + inner(z, au);
    if (with_trace)
      for (int fi = 0; fi < g.num_faces(); ++fi)
        v -= g.faces()[fi].weight * vbd.col(fi).dot(z.trace.col(fi));
    return v;
  };

  int it = 0;
  for (; it < opts.max_iters; ++it) {
    // budget multiplier step on the extrapolated divergence
    if (budgeted) {
      DualField<Scalar> zbar = z;
      zbar.values = Scalar(2) * z.values - z_prev.values;
      GridFunction<Scalar> divz = adjoint_div(op, zbar, BoundaryCondition::Neumann);
      GridFunction<Scalar> p = y;
      p.values += sigma * divz.values;
      GridFunction<Scalar> proj = p;
      proj.values /= sigma;
      detail::project_weighted_l1(proj, omega, budget);
      y.values = p.values - sigma * proj.values;
    }
    z_prev = z;
    // ascent step on z with pointwise conjugate prox
    DualField<Scalar> step = au;
    if (budgeted) {
      DualField<Scalar> ay = apply(op, y);
      step.values += ay.values;
    }
    z.values += tau * step.values;
    detail::prox_conjugate_cellwise(f, tau, z);
    // boundary trace block: projected ascent on the linear face objective
    if (with_trace) {
      for (int fi = 0; fi < g.num_faces(); ++fi) {
        VectorX<Scalar> t = z.trace.col(fi) - tau_t * vbd.col(fi);
        const Face<Scalar>& face = g.faces()[fi];
        const Scalar rho = f.conjugate_domain_radius(face.position);
        z.trace.col(fi) = detail::project_trace_set(op, face.normal, rho, t);
      }
    }
    if ((it + 1) % opts.check_interval == 0) {
      const Scalar v = dual_value();
      const Scalar dz = (z.values - z_prev.values).norm() /
                        (Scalar(1) + z.values.norm());
      if (std::abs(v - last_value) <= opts.gap_tol * (Scalar(1) + std::abs(v)) &&
          dz <= std::sqrt(opts.residual_tol)) {
        last_value = v;
        rep.converged = true;
        ++it;
        break;
      }
      last_value = v;
    }
  }
  rep.iterations = it;
  rep.dual = dual_energy(f, u, z, bc, dirichlet);
  rep.gap = rep.primal - rep.dual;
  rep.maximizer = z;
  if (with_trace) {
    Scalar bt = 0;
    for (int fi = 0; fi < g.num_faces(); ++fi)
      bt -= g.faces()[fi].weight * vbd.col(fi).dot(z.trace.col(fi));
    rep.boundary_term = bt;
  }
  return rep;
}

// F_{u1} through the boundary representation: relaxed energy plus the face
// sum of the boundary integrand at u - u1. Rejected for operators without a
// trace.
template <typename Scalar>
EnergyReport<Scalar> dirichlet_energy(const Integrand<Scalar>& f, const GridFunction<Scalar>& u,
                                      const DirichletData<Scalar>& d,
                                      const SolverOptions<Scalar>& opts = SolverOptions<Scalar>()) {
  const OperatorSpec<Scalar>& op = f.projector();
  if (!op.is_c_elliptic())
    throw std::invalid_argument("dirichlet_energy: operator kind '" + to_string(op.kind) +
                                "' does not admit Dirichlet data");
  EnergyReport<Scalar> rep = relaxed_energy(f, u, BoundaryCondition::Neumann, nullptr, opts);
  MatrixX<Scalar> v = boundary_trace(u) - d.u1;
  Scalar bt = 0;
  for (int fi = 0; fi < u.grid.num_faces(); ++fi) {
    const Face<Scalar>& face = u.grid.faces()[fi];
    bt += face.weight *
          boundary_integrand_h(f, face.position, VectorX<Scalar>(v.col(fi)), face.normal);
  }
  rep.boundary_term = bt;
  rep.dual += bt;
  rep.primal += bt;
  rep.gap = rep.primal - rep.dual;
  return rep;
}

} // namespace lgflow
