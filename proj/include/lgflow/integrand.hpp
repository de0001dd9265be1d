// Pointwise convex-analysis engine: the integrand catalog with Legendre
// conjugates, proximal maps, Moreau envelopes and recession functions.
//
// Every catalog entry is radial in |Ay|: f(x, y) = phi(x, |Ay|) with phi
// convex and nondecreasing in the radial variable. Conjugates, proximal maps
// and recession functions reduce to one-dimensional problems on the profile.
// All operations are pure; instances are safe to share across threads.
#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "lgflow/cantor.hpp"
#include "lgflow/projector.hpp"
#include "lgflow/types.hpp"

namespace lgflow {

enum class IntegrandKind {
  EuclidNorm,          // |Ay|
  Area,                // sqrt(1 + |Ay|^2)
  XWeightedNorm,       // w(x) |Ay|, smooth w in [1, 2]
  NowhereDenseWeighted,// |Ay| off K, 2 |Ay| on K
  QPower,              // base(x, y)^q, 1 < q <= 2
  MoreauOf,            // Moreau envelope of base at parameter lambda
  Perturbed            // base + bounded smooth offset in x
};

enum class ConjugateMode { ClosedForm, Numeric };

template <typename Scalar>
struct ConjugateValue {
  bool finite = false;
  Scalar value = Scalar(0); // meaningful only when finite
};

struct ConjugateNonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RecessionNonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
class Integrand {
public:
  using Matrix = MatrixX<Scalar>;
  using Point = PointX<Scalar>;

  // ---- catalog constructors ----

  static Integrand euclid(Projector<Scalar> proj = Projector<Scalar>()) {
    Integrand f(IntegrandKind::EuclidNorm, std::move(proj));
    f.c0_ = 1; f.C0_ = 1;
    return f;
  }

  static Integrand area(Projector<Scalar> proj = Projector<Scalar>()) {
    Integrand f(IntegrandKind::Area, std::move(proj));
    f.c0_ = 1; f.C0_ = 1;
    return f;
  }

  static Integrand x_weighted(Projector<Scalar> proj = Projector<Scalar>()) {
    Integrand f(IntegrandKind::XWeightedNorm, std::move(proj));
    f.c0_ = 1; f.C0_ = 2;
    return f;
  }

  static Integrand nowhere_dense_weighted(CantorSet K,
                                          Projector<Scalar> proj = Projector<Scalar>()) {
    Integrand f(IntegrandKind::NowhereDenseWeighted, std::move(proj));
    f.K_ = std::make_shared<CantorSet>(std::move(K));
    f.c0_ = 1; f.C0_ = 2;
    return f;
  }

  static Integrand q_power(const Integrand& base, Scalar q) {
    if (!(q > Scalar(1) && q <= Scalar(2)))
      throw std::invalid_argument("q_power: q must lie in (1, 2]");
    if (base.kind_ == IntegrandKind::QPower)
      throw std::invalid_argument("q_power: nested q-powers are not in the catalog");
    Integrand f(IntegrandKind::QPower, base.proj_);
    f.base_ = std::make_shared<Integrand>(base);
    f.q_ = q;
    f.c0_ = base.c0_; f.C0_ = base.C0_;
    f.conjugate_mode_ = base.has_homogeneous_profile() ? ConjugateMode::ClosedForm
                                                       : ConjugateMode::Numeric;
    return f;
  }

  static Integrand moreau_of(const Integrand& base, Scalar lambda) {
    if (!(lambda > Scalar(0))) throw std::invalid_argument("moreau_of: lambda must be positive");
    if (base.kind_ == IntegrandKind::QPower || base.kind_ == IntegrandKind::MoreauOf)
      throw std::invalid_argument("moreau_of: base must have linear growth");
    Integrand f(IntegrandKind::MoreauOf, base.proj_);
    f.base_ = std::make_shared<Integrand>(base);
    f.lambda_ = lambda;
    f.c0_ = base.c0_; f.C0_ = base.C0_;
    return f;
  }

  static Integrand perturbed(const Integrand& base, Scalar amplitude) {
    if (!(amplitude >= Scalar(0))) throw std::invalid_argument("perturbed: amplitude must be >= 0");
    if (base.kind_ == IntegrandKind::QPower)
      throw std::invalid_argument("perturbed: base must have linear growth");
    Integrand f(IntegrandKind::Perturbed, base.proj_);
    f.base_ = std::make_shared<Integrand>(base);
    f.amplitude_ = amplitude;
    f.c0_ = base.c0_; f.C0_ = base.C0_ + amplitude;
    return f;
  }

  // ---- descriptors ----

  IntegrandKind kind() const { return kind_; }
  const Projector<Scalar>& projector() const { return proj_; }
  Scalar c0() const { return c0_; }
  Scalar C0() const { return C0_; }
  // exponent of the growth envelope: 1 for the linear-growth entries, q for powers
  Scalar growth_exponent() const { return kind_ == IntegrandKind::QPower ? q_ : Scalar(1); }
  Scalar q() const { return q_; }
  Scalar moreau_parameter() const { return lambda_; }
  ConjugateMode conjugate_mode() const { return conjugate_mode_; }
  const Integrand* base() const { return base_.get(); }

  Integrand with_numeric_conjugate() const {
    Integrand f = *this;
    f.conjugate_mode_ = ConjugateMode::Numeric;
    return f;
  }

  bool has_linear_growth() const { return kind_ != IntegrandKind::QPower; }

  std::string id() const {
    switch (kind_) {
    case IntegrandKind::EuclidNorm: return "euclid";
    case IntegrandKind::Area: return "area";
    case IntegrandKind::XWeightedNorm: return "xweight";
    case IntegrandKind::NowhereDenseWeighted: return "kweight";
    case IntegrandKind::QPower: {
      std::ostringstream os;
      os << "qpow(" << base_->id() << "," << static_cast<double>(q_) << ")";
      return os.str();
    }
    case IntegrandKind::MoreauOf: {
      std::ostringstream os;
      os << "moreau(" << base_->id() << "," << static_cast<double>(lambda_) << ")";
      return os.str();
    }
    case IntegrandKind::Perturbed: {
      std::ostringstream os;
      os << "perturbed(" << base_->id() << "," << static_cast<double>(amplitude_) << ")";
      return os.str();
    }
    }
    return "?";
  }

  // ---- radial profile ----

  // phi(x, t) with t = |Ay| >= 0
  Scalar profile(const Point& x, Scalar t) const {
    switch (kind_) {
    case IntegrandKind::EuclidNorm: return t;
    case IntegrandKind::Area: return std::sqrt(Scalar(1) + t * t);
    case IntegrandKind::XWeightedNorm: return smooth_weight(x) * t;
    case IntegrandKind::NowhereDenseWeighted: return cantor_weight(x) * t;
    case IntegrandKind::QPower: return std::pow(base_->profile(x, t), q_);
    case IntegrandKind::MoreauOf: {
      const Scalar p = base_->profile_prox(x, lambda_, t);
      return base_->profile(x, p) + (p - t) * (p - t) / (Scalar(2) * lambda_);
    }
    case IntegrandKind::Perturbed: return base_->profile(x, t) + amplitude_ * bump(x);
    }
    return Scalar(0);
  }

  // d/dt phi(x, t); one-sided at t = 0 (the minimal-slope selection)
  Scalar profile_derivative(const Point& x, Scalar t) const {
    switch (kind_) {
    case IntegrandKind::EuclidNorm: return Scalar(1);
    case IntegrandKind::Area: return t / std::sqrt(Scalar(1) + t * t);
    case IntegrandKind::XWeightedNorm: return smooth_weight(x);
    case IntegrandKind::NowhereDenseWeighted: return cantor_weight(x);
    case IntegrandKind::QPower:
      return q_ * std::pow(base_->profile(x, t), q_ - Scalar(1)) *
             base_->profile_derivative(x, t);
    case IntegrandKind::MoreauOf:
      return (t - base_->profile_prox(x, lambda_, t)) / lambda_;
    case IntegrandKind::Perturbed: return base_->profile_derivative(x, t);
    }
    return Scalar(0);
  }

  // argmin_{t >= 0} phi(x, t) + (t - r)^2 / (2 mu)
  Scalar profile_prox(const Point& x, Scalar mu, Scalar r) const {
    switch (kind_) {
    case IntegrandKind::EuclidNorm: return std::max(r - mu, Scalar(0));
    case IntegrandKind::XWeightedNorm: return std::max(r - mu * smooth_weight(x), Scalar(0));
    case IntegrandKind::NowhereDenseWeighted:
      return std::max(r - mu * cantor_weight(x), Scalar(0));
    case IntegrandKind::Perturbed: return base_->profile_prox(x, mu, r);
    case IntegrandKind::MoreauOf: {
      // prox of an envelope via the base prox
      const Scalar p = base_->profile_prox(x, lambda_ + mu, r);
      return r + mu / (lambda_ + mu) * (p - r);
    }
    case IntegrandKind::Area:
    case IntegrandKind::QPower: return prox_by_bisection(x, mu, r);
    }
    return r;
  }

  // sup of dom phi*(x, .); +inf for superlinear entries
  Scalar conjugate_domain_radius(const Point& x) const {
    switch (kind_) {
    case IntegrandKind::EuclidNorm: return Scalar(1);
    case IntegrandKind::Area: return Scalar(1);
    case IntegrandKind::XWeightedNorm: return smooth_weight(x);
    case IntegrandKind::NowhereDenseWeighted: return cantor_weight(x);
    case IntegrandKind::QPower: return std::numeric_limits<Scalar>::infinity();
    case IntegrandKind::MoreauOf:
    case IntegrandKind::Perturbed: return base_->conjugate_domain_radius(x);
    }
    return Scalar(0);
  }

  // phi*(x, s) = sup_{t >= 0} s t - phi(x, t)
  ConjugateValue<Scalar> profile_conjugate(const Point& x, Scalar s) const {
    if (conjugate_mode_ == ConjugateMode::Numeric) return numeric_profile_conjugate(x, s);
    const Scalar rho = conjugate_domain_radius(x);
    switch (kind_) {
    case IntegrandKind::EuclidNorm:
    case IntegrandKind::XWeightedNorm:
    case IntegrandKind::NowhereDenseWeighted:
      if (s > rho * (Scalar(1) + dom_slack())) return {false, Scalar(0)};
      return {true, Scalar(0)};
    case IntegrandKind::Area: {
      if (s > Scalar(1) + dom_slack()) return {false, Scalar(0)};
      const Scalar c = std::min(s, Scalar(1));
      return {true, -std::sqrt(Scalar(1) - c * c)};
    }
    case IntegrandKind::QPower: {
      // base is rho(x) t; (rho^q t^q)* has the usual power form
      const Scalar rb = base_->conjugate_domain_radius(x); // slope of the base
      const Scalar qc = q_ / (q_ - Scalar(1));
      const Scalar t_star = std::pow(s / (q_ * std::pow(rb, q_)), Scalar(1) / (q_ - Scalar(1)));
      const Scalar v = (q_ - Scalar(1)) / q_ * s * t_star;
      (void)qc;
      return {true, v};
    }
    case IntegrandKind::MoreauOf: {
      ConjugateValue<Scalar> cb = base_->profile_conjugate(x, s);
      if (!cb.finite) return cb;
      return {true, cb.value + lambda_ * s * s / Scalar(2)};
    }
    case IntegrandKind::Perturbed: {
      ConjugateValue<Scalar> cb = base_->profile_conjugate(x, s);
      if (!cb.finite) return cb;
      return {true, cb.value - amplitude_ * bump(x)};
    }
    }
    return {false, Scalar(0)};
  }

  // lim_{t -> inf} phi(x, t) / t; +inf for superlinear entries
  Scalar recession_slope(const Point& x) const {
    switch (kind_) {
    case IntegrandKind::EuclidNorm: return Scalar(1);
    case IntegrandKind::Area: return Scalar(1);
    case IntegrandKind::XWeightedNorm: return smooth_weight(x);
    case IntegrandKind::NowhereDenseWeighted: return cantor_weight(x);
    case IntegrandKind::QPower: return std::numeric_limits<Scalar>::infinity();
    case IntegrandKind::MoreauOf:
    case IntegrandKind::Perturbed: return base_->recession_slope(x);
    }
    return Scalar(0);
  }

  bool has_homogeneous_profile() const {
    switch (kind_) {
    case IntegrandKind::EuclidNorm:
    case IntegrandKind::XWeightedNorm:
    case IntegrandKind::NowhereDenseWeighted: return true;
    default: return false;
    }
  }

  const CantorSet* cantor_set() const { return K_.get(); }

  static constexpr Scalar dom_slack() { return Scalar(1e-12); }

private:
  Integrand(IntegrandKind k, Projector<Scalar> proj) : kind_(k), proj_(std::move(proj)) {}

  // smooth positive weight in [1, 2] for the x-weighted entry
  Scalar smooth_weight(const Point& x) const {
    const Scalar x0 = x.size() > 0 ? x[0] : Scalar(0);
    const Scalar two_pi = Scalar(2) * Scalar(M_PI);
    return Scalar(1.5) + Scalar(0.5) * std::cos(two_pi * x0);
  }

  Scalar cantor_weight(const Point& x) const {
    const Scalar x0 = x.size() > 0 ? x[0] : Scalar(0);
    return K_ && K_->contains(static_cast<double>(x0)) ? Scalar(2) : Scalar(1);
  }

  // smooth bounded offset in [0, 1] for the perturbed entry
  Scalar bump(const Point& x) const {
    Scalar acc = 0;
    for (int i = 0; i < x.size(); ++i) acc += x[i];
    const Scalar two_pi = Scalar(2) * Scalar(M_PI);
    return Scalar(0.5) * (Scalar(1) + std::sin(two_pi * acc));
  }

  Scalar prox_by_bisection(const Point& x, Scalar mu, Scalar r) const {
    // minimize phi(t) + (t - r)^2 / (2 mu); the derivative is increasing
    if (r <= Scalar(0)) return Scalar(0);
    auto deriv = [&](Scalar t) { return profile_derivative(x, t) + (t - r) / mu; };
    Scalar lo = 0, hi = r;
    if (deriv(lo) >= Scalar(0)) return Scalar(0);
    for (int i = 0; i < 200; ++i) {
      const Scalar mid = (lo + hi) / Scalar(2);
      if (mid == lo || mid == hi) break;
      (deriv(mid) < Scalar(0) ? lo : hi) = mid;
    }
    return (lo + hi) / Scalar(2);
  }

  ConjugateValue<Scalar> numeric_profile_conjugate(const Point& x, Scalar s) const {
    // sup_{t in [0, R]} s t - phi(t) by golden-section, doubling R until the
    // incremental gain drops below 1e-10. Linear-growth objectives with s
    // beyond the recession slope diverge; that is reported as an infinite
    // conjugate once the value leaves every reasonable scale.
    auto obj = [&](Scalar t) { return s * t - profile(x, t); };
    auto golden_max = [&](Scalar a, Scalar b, Scalar tol) {
      const Scalar gr = (std::sqrt(Scalar(5)) - 1) / Scalar(2);
      Scalar c = b - gr * (b - a), d = a + gr * (b - a);
      Scalar fc = obj(c), fd = obj(d);
      while (b - a > tol) {
        if (fc > fd) { b = d; d = c; fd = fc; c = b - gr * (b - a); fc = obj(c); }
        else { a = c; c = d; fc = fd; d = a + gr * (b - a); fd = obj(d); }
      }
      return std::max(obj((a + b) / 2), std::max(fc, fd));
    };
    Scalar R = Scalar(1);
    Scalar best = std::max(obj(Scalar(0)), golden_max(Scalar(0), R, R * Scalar(1e-13)));
    for (int it = 0; it < 80; ++it) {
      R *= 2;
      const Scalar next = std::max(best, golden_max(Scalar(0), R, R * Scalar(1e-13)));
      const Scalar gain = next - best;
      best = next;
      if (gain < Scalar(1e-10)) {
        // two-level refinement check
        const Scalar refined = golden_max(Scalar(0), R, R * Scalar(1e-15));
        if (std::abs(refined - best) > Scalar(1e-8) * (Scalar(1) + std::abs(best)))
          throw ConjugateNonConvergence("numeric conjugate did not stabilize across refinement");
        return {true, std::max(best, refined)};
      }
      if (best > Scalar(1e12)) return {false, Scalar(0)};
    }
    throw ConjugateNonConvergence("numeric conjugate did not stabilize");
  }

  IntegrandKind kind_;
  Projector<Scalar> proj_;
  Scalar c0_ = 1, C0_ = 1;
  ConjugateMode conjugate_mode_ = ConjugateMode::ClosedForm;
  Scalar q_ = Scalar(1);
  Scalar lambda_ = Scalar(0);
  Scalar amplitude_ = Scalar(0);
  std::shared_ptr<Integrand> base_;
  std::shared_ptr<CantorSet> K_;
};

// ---- matrix-level operations ----

// f(x, A y)
template <typename Scalar>
Scalar evaluate(const Integrand<Scalar>& f, const PointX<Scalar>& x, const MatrixX<Scalar>& y) {
  return f.profile(x, f.projector().projected_norm(y));
}

// Legendre transform in the gradient variable. Values of z outside the range
// of A are projected onto it first: only A z enters the pairing.
template <typename Scalar>
ConjugateValue<Scalar> conjugate(const Integrand<Scalar>& f, const PointX<Scalar>& x,
                                 const MatrixX<Scalar>& z) {
  return f.profile_conjugate(x, f.projector().projected_norm(z));
}

// argmin_v f(x, v) + |v - y|^2 / (2 lambda); the component of y orthogonal to
// the range of A is untouched.
template <typename Scalar>
MatrixX<Scalar> prox(const Integrand<Scalar>& f, Scalar lambda, const PointX<Scalar>& x,
                     const MatrixX<Scalar>& y) {
  if (!(lambda > Scalar(0))) throw std::invalid_argument("prox: lambda must be positive");
  MatrixX<Scalar> ay = f.projector().apply(y);
  const Scalar r = ay.norm();
  if (r == Scalar(0)) return y;
  const Scalar t = f.profile_prox(x, lambda, r);
  return y + (t / r - Scalar(1)) * ay;
}

// Moreau-Yosida envelope f_lambda(x, y)
template <typename Scalar>
Scalar moreau(const Integrand<Scalar>& f, Scalar lambda, const PointX<Scalar>& x,
              const MatrixX<Scalar>& y) {
  if (!(lambda > Scalar(0))) throw std::invalid_argument("moreau: lambda must be positive");
  const Scalar r = f.projector().projected_norm(y);
  const Scalar t = f.profile_prox(x, lambda, r);
  return f.profile(x, t) + (t - r) * (t - r) / (Scalar(2) * lambda);
}

// f^inf(x, y) = lim (1/t) f(x, t y); closed form for the catalog, with a
// t-doubling fallback that reports non-convergence if it never stabilizes.
template <typename Scalar>
Scalar recession(const Integrand<Scalar>& f, const PointX<Scalar>& x, const MatrixX<Scalar>& y) {
  const Scalar r = f.projector().projected_norm(y);
  if (r == Scalar(0)) return Scalar(0);
  const Scalar slope = f.recession_slope(x);
  if (std::isinf(slope)) return slope;
  return slope * r;
}

// The t-doubling evaluation behind `recession`, exposed so that the numeric
// path stays exercised against the closed forms.
template <typename Scalar>
Scalar recession_by_doubling(const Integrand<Scalar>& f, const PointX<Scalar>& x,
                             const MatrixX<Scalar>& y, Scalar tol = Scalar(1e-11)) {
  const Scalar r = f.projector().projected_norm(y);
  if (r == Scalar(0)) return Scalar(0);
  Scalar t = Scalar(1);
  Scalar prev = f.profile(x, t * r) / t;
  for (int i = 0; i < 100; ++i) {
    t *= 2;
    const Scalar cur = f.profile(x, t * r) / t;
    if (std::abs(cur - prev) < tol * (Scalar(1) + std::abs(cur))) return cur;
    if (cur > Scalar(1e14)) return std::numeric_limits<Scalar>::infinity();
    prev = cur;
  }
  throw RecessionNonConvergence("recession t-doubling did not stabilize");
}

// minimal-norm element of the subdifferential of f(x, .) at y
template <typename Scalar>
MatrixX<Scalar> subgradient(const Integrand<Scalar>& f, const PointX<Scalar>& x,
                            const MatrixX<Scalar>& y) {
  MatrixX<Scalar> ay = f.projector().apply(y);
  const Scalar r = ay.norm();
  if (r == Scalar(0)) return MatrixX<Scalar>::Zero(y.rows(), y.cols());
  return (f.profile_derivative(x, r) / r) * ay;
}

// the integrand (x, y) -> f(x, y)^q, 1 < q <= 2
template <typename Scalar>
Integrand<Scalar> qpower(const Integrand<Scalar>& f, Scalar q) {
  return Integrand<Scalar>::q_power(f, q);
}

} // namespace lgflow
