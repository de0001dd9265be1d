// Pointwise action of the coefficient matrix A on Jacobians.
//
// A is a symmetric idempotent operator on m-by-n matrices. The three catalog
// choices are the identity (full gradient), the symmetrizer (symmetric
// gradient, m == n) and the normalized trace projector (divergence, m == n,
// embedding div u as (div u) I / n).
#pragma once

#include <stdexcept>
#include <string>

#include "lgflow/types.hpp"

namespace lgflow {

enum class OperatorKind { FullGradient, SymmetricGradient, Divergence };

inline std::string to_string(OperatorKind k) {
  switch (k) {
  case OperatorKind::FullGradient: return "full-gradient";
  case OperatorKind::SymmetricGradient: return "symmetric-gradient";
  case OperatorKind::Divergence: return "divergence";
  }
  return "?";
}

inline OperatorKind operator_kind_from_string(const std::string& s) {
  if (s == "full-gradient") return OperatorKind::FullGradient;
  if (s == "symmetric-gradient") return OperatorKind::SymmetricGradient;
  if (s == "divergence") return OperatorKind::Divergence;
  throw std::invalid_argument("unknown operator kind: " + s);
}

template <typename Scalar>
struct Projector {
  OperatorKind kind = OperatorKind::FullGradient;
  int m = 1; // components of u
  int n = 1; // spatial dimension

  Projector() = default;
  Projector(OperatorKind k, int m_, int n_) : kind(k), m(m_), n(n_) {
    if (m <= 0 || n <= 0) throw std::invalid_argument("Projector: dims must be positive");
    if (kind != OperatorKind::FullGradient && m != n)
      throw std::invalid_argument("Projector: " + to_string(kind) + " requires m == n");
  }

  // A y, for y an m-by-n matrix.
  MatrixX<Scalar> apply(const MatrixX<Scalar>& y) const {
    check_shape(y);
    switch (kind) {
    case OperatorKind::FullGradient: return y;
    case OperatorKind::SymmetricGradient: return ((y + y.transpose()) / Scalar(2)).eval();
    case OperatorKind::Divergence: {
      const Scalar t = y.trace() / Scalar(n);
      return (t * MatrixX<Scalar>::Identity(m, n)).eval();
    }
    }
    return y;
  }

  Scalar projected_norm(const MatrixX<Scalar>& y) const { return apply(y).norm(); }

  // The divergence operator loses the trace information needed for a
  // boundary trace in n > 1; see the catalog predicate below.
  bool is_c_elliptic() const {
    if (kind == OperatorKind::Divergence) return n == 1;
    return true;
  }

  // Dense (m n)-by-(m n) representation of A acting on vectorized matrices,
  // column-major. Used by tests to confirm A = A^T and A^2 = A.
  MatrixX<Scalar> dense_matrix() const {
    const int d = m * n;
    MatrixX<Scalar> M(d, d);
    MatrixX<Scalar> basis = MatrixX<Scalar>::Zero(m, n);
    for (int c = 0; c < d; ++c) {
      basis(c % m, c / m) = Scalar(1);
      MatrixX<Scalar> img = apply(basis);
      M.col(c) = Eigen::Map<VectorX<Scalar>>(img.data(), d);
      basis(c % m, c / m) = Scalar(0);
    }
    return M;
  }

  void check_shape(const MatrixX<Scalar>& y) const {
    if (y.rows() != m || y.cols() != n)
      throw std::invalid_argument("Projector: expected " + std::to_string(m) + "x" +
                                  std::to_string(n) + " matrix, got " +
                                  std::to_string(y.rows()) + "x" + std::to_string(y.cols()));
  }
};

} // namespace lgflow
