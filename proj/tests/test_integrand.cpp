#include <doctest.h>

#include <cmath>

#include "lgflow/fields.hpp"
#include "lgflow/integrand.hpp"

using namespace lgflow;

using Mat = MatrixX<double>;
using Pt = PointX<double>;

namespace {

Mat m1(double v) {
  Mat y(1, 1);
  y(0, 0) = v;
  return y;
}

Mat m12(double a, double b) {
  Mat y(1, 2);
  y(0, 0) = a;
  y(0, 1) = b;
  return y;
}

Pt pt(double x) {
  Pt p(1);
  p[0] = x;
  return p;
}

// ---- independent brute-force oracles on the radial profile ----

// sup_{t >= 0} s t - phi(t) over a sampled, refined grid
double oracle_conjugate(const Integrand<double>& f, const Pt& x, double s, double tmax = 64.0) {
  double best = -1e300;
  double t_best = 0;
  const int N = 20000;
  for (int i = 0; i <= N; ++i) {
    const double t = tmax * i / N;
    const double v = s * t - f.profile(x, t);
    if (v > best) { best = v; t_best = t; }
  }
  // refine around the best sample
  double lo = std::max(0.0, t_best - tmax / N), hi = t_best + tmax / N;
  for (int r = 0; r < 3; ++r) {
    double b2 = best, t2 = t_best;
    for (int i = 0; i <= 2000; ++i) {
      const double t = lo + (hi - lo) * i / 2000.0;
      const double v = s * t - f.profile(x, t);
      if (v > b2) { b2 = v; t2 = t; }
    }
    best = b2;
    const double w = (hi - lo) / 2000.0;
    lo = std::max(0.0, t2 - w);
    hi = t2 + w;
  }
  return best;
}

// argmin_{t >= 0} phi(t) + (t - r)^2 / (2 mu), sampled and refined
double oracle_prox(const Integrand<double>& f, const Pt& x, double mu, double r) {
  auto obj = [&](double t) { return f.profile(x, t) + (t - r) * (t - r) / (2 * mu); };
  double lo = 0, hi = std::max(r, 1.0) * 1.5 + 1;
  double t_best = 0, best = obj(0);
  for (int round = 0; round < 6; ++round) {
    for (int i = 0; i <= 4000; ++i) {
      const double t = lo + (hi - lo) * i / 4000.0;
      const double v = obj(t);
      if (v < best) { best = v; t_best = t; }
    }
    const double w = (hi - lo) / 4000.0;
    lo = std::max(0.0, t_best - w);
    hi = t_best + w;
  }
  return t_best;
}

double oracle_moreau(const Integrand<double>& f, const Pt& x, double mu, double r) {
  const double t = oracle_prox(f, x, mu, r);
  return f.profile(x, t) + (t - r) * (t - r) / (2 * mu);
}

} // namespace

TEST_CASE("evaluate: catalog values") {
  Projector<double> p12(OperatorKind::FullGradient, 1, 2);
  auto euclid = Integrand<double>::euclid(p12);
  CHECK(evaluate(euclid, Pt(Pt::Zero(2)), m12(3, 4)) == doctest::Approx(5.0));

  auto area = Integrand<double>::area(p12);
  CHECK(evaluate(area, Pt(Pt::Zero(2)), m12(0, 0)) == doctest::Approx(1.0));

  auto K = CantorSet::build(7, 64);
  Projector<double> p11(OperatorKind::FullGradient, 1, 1);
  auto kw = Integrand<double>::nowhere_dense_weighted(K, p11);
  // find one cell center inside K and one outside
  double xin = -1, xout = -1;
  for (int c = 0; c < 64; ++c) {
    const double x = (c + 0.5) / 64.0;
    (K.contains(x) ? xin : xout) = x;
  }
  REQUIRE(xin >= 0);
  REQUIRE(xout >= 0);
  CHECK(evaluate(kw, pt(xin), m1(1)) == doctest::Approx(2.0));
  CHECK(evaluate(kw, pt(xout), m1(1)) == doctest::Approx(1.0));
}

TEST_CASE("evaluate only sees the projected argument") {
  Projector<double> sym(OperatorKind::SymmetricGradient, 2, 2);
  auto f = Integrand<double>::area(sym);
  Mat y(2, 2);
  y << 1, 2, 3, 4;
  Pt x = Pt::Zero(2);
  CHECK(evaluate(f, x, y) == doctest::Approx(evaluate(f, x, sym.apply(y))));
}

TEST_CASE("conjugate: euclid is the support of the unit ball") {
  auto f = Integrand<double>::euclid(Projector<double>(OperatorKind::FullGradient, 1, 2));
  Pt x = Pt::Zero(2);
  auto in = conjugate(f, x, m12(0.6, 0.8));
  CHECK(in.finite);
  CHECK(in.value == doctest::Approx(0.0));
  auto out = conjugate(f, x, m12(0.9, 0.8));
  CHECK_FALSE(out.finite);
}

TEST_CASE("conjugate: area matches the brute-force supremum") {
  auto f = Integrand<double>::area(Projector<double>(OperatorKind::FullGradient, 1, 1));
  Pt x = pt(0.3);
  for (double s : {0.0, 0.25, 0.5, 0.9, 0.99}) {
    const double expected = -std::sqrt(1.0 - s * s);
    CHECK(oracle_conjugate(f, x, s, 256.0) == doctest::Approx(expected).epsilon(1e-5));
    auto cv = conjugate(f, x, m1(s));
    REQUIRE(cv.finite);
    CHECK(cv.value == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK_FALSE(conjugate(f, x, m1(1.1)).finite);
}

TEST_CASE("conjugate: nowhere-dense weight doubles the ball on K") {
  auto K = CantorSet::build(7, 64);
  auto f = Integrand<double>::nowhere_dense_weighted(K, Projector<double>(OperatorKind::FullGradient, 1, 1));
  double xin = -1;
  for (int c = 0; c < 64; ++c)
    if (K.contains((c + 0.5) / 64.0)) { xin = (c + 0.5) / 64.0; break; }
  REQUIRE(xin >= 0);
  auto cv = conjugate(f, pt(xin), m1(1.7));
  CHECK(cv.finite);
  CHECK(cv.value == doctest::Approx(0.0));
  CHECK_FALSE(conjugate(f, pt(xin), m1(2.2)).finite);
}

TEST_CASE("prox: shrinkage values against the brute-force oracle") {
  auto f = Integrand<double>::euclid(Projector<double>(OperatorKind::FullGradient, 1, 1));
  Pt x = pt(0.5);
  CHECK(oracle_prox(f, x, 1.0, 0.5) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(prox(f, 1.0, x, m1(0.5))(0, 0) == doctest::Approx(0.0));
  CHECK(oracle_prox(f, x, 1.0, 3.0) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(prox(f, 1.0, x, m1(3.0))(0, 0) == doctest::Approx(2.0));

  auto area = Integrand<double>::area(Projector<double>(OperatorKind::FullGradient, 1, 1));
  CHECK(prox(area, 1.0, x, m1(0.0))(0, 0) == doctest::Approx(0.0));
  for (double r : {0.3, 1.0, 2.5, 7.0}) {
    const double got = prox(area, 0.7, x, m1(r))(0, 0);
    CHECK(got == doctest::Approx(oracle_prox(area, x, 0.7, r)).epsilon(1e-6));
  }
}

TEST_CASE("prox is nonexpansive in y") {
  SplitMix64 rng(123);
  Projector<double> p12(OperatorKind::FullGradient, 1, 2);
  for (const auto& f : {Integrand<double>::euclid(p12), Integrand<double>::area(p12),
                        Integrand<double>::x_weighted(p12)}) {
    for (int i = 0; i < 50; ++i) {
      Mat y1 = m12(4 * rng.next_symmetric(), 4 * rng.next_symmetric());
      Mat y2 = m12(4 * rng.next_symmetric(), 4 * rng.next_symmetric());
      Pt x = pt(rng.next_uniform());
      const double lam = 0.05 + 2 * rng.next_uniform();
      CHECK((prox(f, lam, x, y1) - prox(f, lam, x, y2)).norm() <=
            (y1 - y2).norm() * (1 + 1e-12));
    }
  }
}

TEST_CASE("moreau: envelope values and the sandwich bound") {
  auto f = Integrand<double>::euclid(Projector<double>(OperatorKind::FullGradient, 1, 1));
  Pt x = pt(0.0);
  CHECK(oracle_moreau(f, x, 1.0, 0.5) == doctest::Approx(0.125).epsilon(1e-6));
  CHECK(moreau(f, 1.0, x, m1(0.5)) == doctest::Approx(0.125));
  CHECK(oracle_moreau(f, x, 1.0, 3.0) == doctest::Approx(2.5).epsilon(1e-6));
  CHECK(moreau(f, 1.0, x, m1(3.0)) == doctest::Approx(2.5));

  // f - C0^2 lambda / 2 <= f_lambda <= f on random samples, three lambdas
  SplitMix64 rng(5);
  Projector<double> p12(OperatorKind::FullGradient, 1, 2);
  auto K = CantorSet::build(3, 128);
  std::vector<Integrand<double>> catalog = {
      Integrand<double>::euclid(p12), Integrand<double>::area(p12),
      Integrand<double>::x_weighted(p12),
      Integrand<double>::nowhere_dense_weighted(K, p12),
      Integrand<double>::perturbed(Integrand<double>::euclid(p12), 0.5)};
  for (const auto& g : catalog) {
    for (double lam : {1e-3, 1e-1, 1.0}) {
      for (int i = 0; i < 20; ++i) {
        Mat y = m12(6 * rng.next_symmetric(), 6 * rng.next_symmetric());
        Pt x2 = pt(rng.next_uniform());
        const double fv = evaluate(g, x2, y);
        const double fl = moreau(g, lam, x2, y);
        CHECK(fl <= fv + 1e-12);
        CHECK(fl >= fv - g.C0() * g.C0() * lam / 2 - 1e-12);
      }
    }
  }
}

TEST_CASE("recession: closed forms, doubling fallback, homogeneity") {
  Projector<double> p12(OperatorKind::FullGradient, 1, 2);
  auto euclid = Integrand<double>::euclid(p12);
  auto area = Integrand<double>::area(p12);
  Pt x = Pt::Zero(2);

  CHECK(recession(euclid, x, m12(3, 4)) == doctest::Approx(5.0));
  CHECK(recession(area, x, m12(1, 0)) == doctest::Approx(1.0));
  CHECK(recession_by_doubling(area, x, m12(1, 0)) == doctest::Approx(1.0).epsilon(1e-9));

  // 1-homogeneity is exact for the closed forms
  SplitMix64 rng(17);
  for (int i = 0; i < 30; ++i) {
    Mat y = m12(rng.next_symmetric(), rng.next_symmetric());
    const double s = 0.1 + 10 * rng.next_uniform();
    for (const auto& f : {euclid, area}) {
      const double a = recession(f, x, Mat(s * y));
      const double b = s * recession(f, x, y);
      CHECK(a == doctest::Approx(b).epsilon(1e-13));
      CHECK(recession(f, x, y) >= f.c0() * p12.apply(y).norm() - 1e-14);
    }
  }

  // bounded perturbations do not change the recession function
  auto pert = Integrand<double>::perturbed(area, 0.8);
  for (int i = 0; i < 20; ++i) {
    Mat y = m12(3 * rng.next_symmetric(), 3 * rng.next_symmetric());
    Pt xp = pt(rng.next_uniform());
    CHECK(recession(pert, xp, y) == doctest::Approx(recession(area, xp, y)));
    CHECK(recession_by_doubling(pert, xp, y) ==
          doctest::Approx(recession(area, xp, y)).epsilon(1e-8));
  }
}

TEST_CASE("qpower: values, prox, parameter validation") {
  Projector<double> p11(OperatorKind::FullGradient, 1, 1);
  auto euclid = Integrand<double>::euclid(p11);
  Pt x = pt(0.0);

  auto f2 = qpower(euclid, 2.0);
  CHECK(evaluate(f2, x, m1(2)) == doctest::Approx(4.0));

  // q -> 1 continuity
  auto fq = qpower(euclid, 1.0 + 1e-12);
  for (double t : {0.1, 1.0, 5.0, 10.0})
    CHECK(std::abs(evaluate(fq, x, m1(t)) - t) < 1e-6);

  // prox of the square against the closed minimizer of t^2 + (t-3)^2/2
  CHECK(oracle_prox(f2, x, 1.0, 3.0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(prox(f2, 1.0, x, m1(3.0))(0, 0) == doctest::Approx(1.0).epsilon(1e-10));

  CHECK_THROWS_AS(qpower(euclid, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(qpower(euclid, 2.5), std::invalid_argument);

  // closed-form power conjugate against the brute-force supremum
  for (double q : {1.3, 1.7, 2.0}) {
    auto fqq = qpower(euclid, q);
    for (double s : {0.2, 1.0, 2.4}) {
      auto cv = fqq.profile_conjugate(x, s);
      REQUIRE(cv.finite);
      CHECK(cv.value == doctest::Approx(oracle_conjugate(fqq, x, s, 32.0)).epsilon(1e-5));
    }
  }

  // coercivity of the power: (1/C) t^q - C <= f^q
  for (double q : {1.1, 1.5, 2.0}) {
    auto fqq = qpower(euclid, q);
    const double C = 2.0;
    for (double t : {0.0, 0.5, 2.0, 20.0})
      CHECK(evaluate(fqq, x, m1(t)) >= std::pow(t, q) / C - C);
  }
}

TEST_CASE("moreau-of integrand: conjugate shift and prox composition") {
  Projector<double> p11(OperatorKind::FullGradient, 1, 1);
  auto area = Integrand<double>::area(p11);
  auto freg = Integrand<double>::moreau_of(area, 0.2);
  Pt x = pt(0.0);
  // (f_lambda)* = f* + lambda |.|^2 / 2 on the same domain
  for (double s : {0.0, 0.4, 0.95}) {
    auto cv = freg.profile_conjugate(x, s);
    REQUIRE(cv.finite);
    CHECK(cv.value == doctest::Approx(-std::sqrt(1 - s * s) + 0.2 * s * s / 2).epsilon(1e-12));
    CHECK(cv.value == doctest::Approx(oracle_conjugate(freg, x, s, 256.0)).epsilon(1e-5));
  }
  CHECK_FALSE(freg.profile_conjugate(x, 1.3).finite);
  // envelope value equals the brute-force inf
  for (double r : {0.0, 0.7, 4.0})
    CHECK(evaluate(freg, x, m1(r)) == doctest::Approx(oracle_moreau(area, x, 0.2, r)).epsilon(1e-7));
  // prox of the envelope against the oracle
  for (double r : {0.5, 2.0})
    CHECK(prox(freg, 0.6, x, m1(r))(0, 0) ==
          doctest::Approx(oracle_prox(freg, x, 0.6, r)).epsilon(1e-6));
}

TEST_CASE("Fenchel-Young inequality and equality at the subgradient") {
  SplitMix64 rng(99);
  Projector<double> p12(OperatorKind::FullGradient, 1, 2);
  auto K = CantorSet::build(11, 64);
  std::vector<Integrand<double>> catalog = {
      Integrand<double>::euclid(p12), Integrand<double>::area(p12),
      Integrand<double>::x_weighted(p12),
      Integrand<double>::nowhere_dense_weighted(K, p12),
      qpower(Integrand<double>::euclid(p12), 1.5),
      Integrand<double>::moreau_of(Integrand<double>::area(p12), 0.3)};
  for (const auto& f : catalog) {
    for (int i = 0; i < 500; ++i) {
      Mat y = m12(5 * rng.next_symmetric(), 5 * rng.next_symmetric());
      Pt x = pt(rng.next_uniform());
      Mat z = m12(2.2 * rng.next_symmetric(), 2.2 * rng.next_symmetric());
      auto cv = conjugate(f, x, z);
      if (cv.finite) {
        const double pair = (p12.apply(z).array() * p12.apply(y).array()).sum();
        CHECK(evaluate(f, x, y) + cv.value >= pair - 1e-10);
      }
      // equality at the returned subgradient
      Mat g = subgradient(f, x, y);
      auto cg = conjugate(f, x, g);
      REQUIRE(cg.finite);
      const double pair = (g.array() * p12.apply(y).array()).sum();
      CHECK(std::abs(evaluate(f, x, y) + cg.value - pair) < 1e-8);
    }
  }
}

TEST_CASE("biconjugation: numeric double conjugate recovers the integrand") {
  Projector<double> p11(OperatorKind::FullGradient, 1, 1);
  Pt x = pt(0.37);
  for (const auto& f : {Integrand<double>::euclid(p11), Integrand<double>::area(p11),
                        Integrand<double>::x_weighted(p11)}) {
    const double rho = f.conjugate_domain_radius(x);
    for (double t : {0.0, 0.3, 1.0, 2.7}) {
      // f**(t) = sup_{0 <= s <= rho} t s - f*(s), sampled on the library conjugates
      double best = -1e300;
      for (int i = 0; i <= 40000; ++i) {
        const double s = rho * i / 40000.0;
        auto cv = f.profile_conjugate(x, s);
        if (cv.finite) best = std::max(best, t * s - cv.value);
      }
      CHECK(best == doctest::Approx(f.profile(x, t)).epsilon(1e-6));
    }
  }
}

TEST_CASE("numeric conjugate mode agrees with the closed forms") {
  Projector<double> p11(OperatorKind::FullGradient, 1, 1);
  Pt x = pt(0.2);
  for (const auto& f : {Integrand<double>::euclid(p11), Integrand<double>::area(p11),
                        Integrand<double>::x_weighted(p11)}) {
    auto fn = f.with_numeric_conjugate();
    for (double s : {0.0, 0.3, 0.8}) {
      auto closed = f.profile_conjugate(x, s);
      auto numeric = fn.profile_conjugate(x, s);
      REQUIRE(closed.finite);
      REQUIRE(numeric.finite);
      CHECK(numeric.value == doctest::Approx(closed.value).epsilon(1e-7));
    }
    // far beyond the domain the numeric search reports an infinite value
    CHECK_FALSE(fn.profile_conjugate(x, f.conjugate_domain_radius(x) + 0.5).finite);
  }
}

TEST_CASE("growth bounds hold on samples") {
  SplitMix64 rng(31);
  Projector<double> p12(OperatorKind::FullGradient, 1, 2);
  auto K = CantorSet::build(13, 256);
  std::vector<Integrand<double>> catalog = {
      Integrand<double>::euclid(p12), Integrand<double>::area(p12),
      Integrand<double>::x_weighted(p12),
      Integrand<double>::nowhere_dense_weighted(K, p12),
      Integrand<double>::perturbed(Integrand<double>::area(p12), 0.4)};
  for (const auto& f : catalog) {
    for (int i = 0; i < 200; ++i) {
      Mat y = m12(8 * rng.next_symmetric(), 8 * rng.next_symmetric());
      Pt x = pt(rng.next_uniform());
      const double t = p12.apply(y).norm();
      const double v = evaluate(f, x, y);
      CHECK(v >= 0.0);
      CHECK(v >= f.c0() * t - 1e-12);
      CHECK(v <= f.C0() * (1 + t) + 1e-12);
      // Lipschitz bound in the second variable
      Mat y2 = m12(8 * rng.next_symmetric(), 8 * rng.next_symmetric());
      CHECK(std::abs(v - evaluate(f, x, y2)) <= f.C0() * (y - y2).norm() + 1e-12);
    }
  }
}

TEST_CASE("fat-Cantor set: measure, determinism, nowhere-dense realization") {
  for (int cells : {64, 128, 256, 512}) {
    auto K = CantorSet::build(7, cells);
    CHECK(K.measure() == doctest::Approx(0.5).epsilon(1e-12));
    // closed intervals, disjoint with gaps, none wider than a few cells
    const double h = 1.0 / cells;
    double prev_end = -1;
    for (const auto& iv : K.intervals()) {
      CHECK(iv.first > prev_end);
      CHECK(iv.second - iv.first <= 3 * h + 1e-12);
      prev_end = iv.second;
    }
  }
  auto K1 = CantorSet::build(42, 128);
  auto K2 = CantorSet::build(42, 128);
  CHECK(K1.intervals() == K2.intervals());
  auto K3 = CantorSet::build(43, 128);
  CHECK(K1.intervals() != K3.intervals());
}
