// Regular grids on rectangles, vertex-based m-vector fields and staggered
// matrix-valued dual fields.
//
// Nodes sit on cell vertices, so a grid with N cells per axis carries N+1
// node layers per axis. Dual fields live on cell centers and optionally carry
// a normal-trace block on the boundary faces. The L2 pairing on nodes uses
// trapezoidal weights so that discrete integration by parts is exact.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lgflow/projector.hpp"
#include "lgflow/types.hpp"

namespace lgflow {

enum class BoundaryCondition { Neumann, TraceCarrying };

inline std::string to_string(BoundaryCondition bc) {
  return bc == BoundaryCondition::Neumann ? "neumann" : "trace-carrying";
}

template <typename Scalar>
struct Face {
  int node = 0;              // node carrying the trace sample
  int side = 0;              // 2*axis + (0 lower | 1 upper)
  VectorX<Scalar> normal;    // outward unit normal
  Scalar weight = 1;         // surface quadrature weight (h^{n-1} scaled)
  PointX<Scalar> position;
};

template <typename Scalar>
class Grid {
public:
  Grid() = default;

  Grid(std::vector<int> cells_per_axis, Scalar spacing)
      : shape_(std::move(cells_per_axis)), h_(spacing) {
    const int n = static_cast<int>(shape_.size());
    if (n < 1 || n > 2) throw std::invalid_argument("Grid: dimension must be 1 or 2");
    if (!(h_ > Scalar(0))) throw std::invalid_argument("Grid: spacing must be positive");
    for (int s : shape_)
      if (s < 1) throw std::invalid_argument("Grid: need at least one cell per axis");
    build_faces();
  }

  int dim() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  Scalar spacing() const { return h_; }

  int num_nodes() const {
    int p = 1;
    for (int s : shape_) p *= (s + 1);
    return p;
  }
  int num_cells() const {
    int p = 1;
    for (int s : shape_) p *= s;
    return p;
  }
  int num_faces() const { return static_cast<int>(faces_.size()); }
  const std::vector<Face<Scalar>>& faces() const { return faces_; }

  Scalar cell_volume() const {
    Scalar v = 1;
    for (int d = 0; d < dim(); ++d) v *= h_;
    return v;
  }
  Scalar domain_volume() const { return cell_volume() * num_cells(); }

  int node_index(int i, int j = 0) const { return i + (shape_[0] + 1) * j; }
  int cell_index(int i, int j = 0) const { return i + shape_[0] * j; }

  PointX<Scalar> node_position(int k) const {
    PointX<Scalar> p(dim());
    const int nx = shape_[0] + 1;
    p[0] = Scalar(k % nx) * h_;
    if (dim() == 2) p[1] = Scalar(k / nx) * h_;
    return p;
  }

  PointX<Scalar> cell_position(int c) const {
    PointX<Scalar> p(dim());
    const int nx = shape_[0];
    p[0] = (Scalar(c % nx) + Scalar(0.5)) * h_;
    if (dim() == 2) p[1] = (Scalar(c / nx) + Scalar(0.5)) * h_;
    return p;
  }

  // trapezoidal node weight (1 interior, 1/2 per boundary axis hit)
  Scalar node_weight(int k) const {
    const int nx = shape_[0] + 1;
    const int i = k % nx;
    Scalar w = (i == 0 || i == shape_[0]) ? Scalar(0.5) : Scalar(1);
    if (dim() == 2) {
      const int j = k / nx;
      w *= (j == 0 || j == shape_[1]) ? Scalar(0.5) : Scalar(1);
    }
    return w;
  }

  bool compatible(const Grid& other) const {
    return shape_ == other.shape_ && h_ == other.h_;
  }

private:
  void build_faces() {
    faces_.clear();
    const int n = dim();
    if (n == 1) {
      Face<Scalar> left, right;
      left.node = 0;
      left.side = 0;
      left.normal = VectorX<Scalar>::Constant(1, Scalar(-1));
      left.weight = Scalar(1);
      left.position = node_position(0);
      right.node = shape_[0];
      right.side = 1;
      right.normal = VectorX<Scalar>::Constant(1, Scalar(1));
      right.weight = Scalar(1);
      right.position = node_position(shape_[0]);
      faces_.push_back(left);
      faces_.push_back(right);
      return;
    }
    const int nx = shape_[0], ny = shape_[1];
    auto side_weight = [&](int idx, int last) {
      return (idx == 0 || idx == last) ? h_ / Scalar(2) : h_;
    };
    for (int axis = 0; axis < 2; ++axis) {
      for (int upper = 0; upper < 2; ++upper) {
        const int along = (axis == 0) ? ny : nx;
        for (int t = 0; t <= along; ++t) {
          Face<Scalar> f;
          f.side = 2 * axis + upper;
          const int i = (axis == 0) ? (upper ? nx : 0) : t;
          const int j = (axis == 0) ? t : (upper ? ny : 0);
          f.node = node_index(i, j);
          f.normal = VectorX<Scalar>::Zero(2);
          f.normal[axis] = upper ? Scalar(1) : Scalar(-1);
          f.weight = side_weight(t, along);
          f.position = node_position(f.node);
          faces_.push_back(f);
        }
      }
    }
  }

  std::vector<int> shape_;
  Scalar h_ = Scalar(1);
  std::vector<Face<Scalar>> faces_;
};

// m-component field sampled on grid nodes (one column per node)
template <typename Scalar>
struct GridFunction {
  Grid<Scalar> grid;
  MatrixX<Scalar> values; // m x num_nodes

  GridFunction() = default;
  GridFunction(Grid<Scalar> g, int components)
      : grid(std::move(g)), values(MatrixX<Scalar>::Zero(components, grid.num_nodes())) {}
  GridFunction(Grid<Scalar> g, MatrixX<Scalar> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.cols() != grid.num_nodes())
      throw std::invalid_argument("GridFunction: value count does not match grid");
  }

  int components() const { return static_cast<int>(values.rows()); }
};

// m x n matrix field on staggered cells (columns are vectorized matrices),
// plus an optional normal-trace block on boundary faces.
template <typename Scalar>
struct DualField {
  Grid<Scalar> grid;
  int m = 1;
  MatrixX<Scalar> values; // (m*n) x num_cells
  MatrixX<Scalar> trace;  // m x num_faces, or empty in Neumann mode

  DualField() = default;
  DualField(Grid<Scalar> g, int components, bool with_trace = false)
      : grid(std::move(g)), m(components),
        values(MatrixX<Scalar>::Zero(components * grid.dim(), grid.num_cells())) {
    if (with_trace) trace = MatrixX<Scalar>::Zero(components, grid.num_faces());
  }

  bool has_trace() const { return trace.size() > 0; }

  MatrixX<Scalar> cell_matrix(int c) const {
    return Eigen::Map<const MatrixX<Scalar>>(values.col(c).data(), m, grid.dim());
  }
  void set_cell_matrix(int c, const MatrixX<Scalar>& z) {
    Eigen::Map<MatrixX<Scalar>>(values.col(c).data(), m, grid.dim()) = z;
  }

  // Enforce A z = z cellwise.
  void project(const Projector<Scalar>& A) {
    for (int c = 0; c < values.cols(); ++c) set_cell_matrix(c, A.apply(cell_matrix(c)));
  }
};

// weighted L2 pairing of node fields
template <typename Scalar>
Scalar inner(const GridFunction<Scalar>& a, const GridFunction<Scalar>& b) {
  if (!a.grid.compatible(b.grid) || a.values.rows() != b.values.rows())
    throw std::invalid_argument("inner: incompatible fields");
  const Scalar vol = a.grid.cell_volume();
  Scalar s = 0;
  for (int k = 0; k < a.values.cols(); ++k)
    s += a.grid.node_weight(k) * a.values.col(k).dot(b.values.col(k));
  return s * vol;
}

template <typename Scalar>
Scalar l2_norm(const GridFunction<Scalar>& a) {
  return std::sqrt(std::max(Scalar(0), inner(a, a)));
}

// cell-weighted pairing of dual fields (traces do not enter)
template <typename Scalar>
Scalar inner(const DualField<Scalar>& a, const DualField<Scalar>& b) {
  if (!a.grid.compatible(b.grid) || a.values.rows() != b.values.rows())
    throw std::invalid_argument("inner: incompatible dual fields");
  const Scalar vol = a.grid.cell_volume();
  Scalar s = 0;
  for (int c = 0; c < a.values.cols(); ++c) s += a.values.col(c).dot(b.values.col(c));
  return s * vol;
}

// integral of the field (trapezoidal), summed over components
template <typename Scalar>
Scalar mass(const GridFunction<Scalar>& u) {
  const Scalar vol = u.grid.cell_volume();
  Scalar s = 0;
  for (int k = 0; k < u.values.cols(); ++k) s += u.grid.node_weight(k) * u.values.col(k).sum();
  return s * vol;
}

} // namespace lgflow
