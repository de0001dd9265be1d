// Node-field factories used by scenarios and tests.
#pragma once

#include <cmath>
#include <cstdint>

#include "lgflow/grid.hpp"

namespace lgflow {

// deterministic, platform-independent uniforms in [0, 1)
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  double next_uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }
  double next_symmetric() { return 2.0 * next_uniform() - 1.0; }

private:
  std::uint64_t state_;
};

template <typename Scalar>
GridFunction<Scalar> constant_field(const Grid<Scalar>& g, int m, Scalar value) {
  GridFunction<Scalar> u(g, m);
  u.values.setConstant(value);
  return u;
}

// u(x) = x (componentwise identity of the first m coordinates)
template <typename Scalar>
GridFunction<Scalar> ramp_field(const Grid<Scalar>& g, int m = 1) {
  GridFunction<Scalar> u(g, m);
  for (int k = 0; k < g.num_nodes(); ++k) {
    const PointX<Scalar> p = g.node_position(k);
    for (int r = 0; r < m; ++r) u.values(r, k) = p[r % g.dim()];
  }
  return u;
}

// scalar indicator of [lo, hi] along the first axis, half-valued on nodes
// that sit exactly on the jump
template <typename Scalar>
GridFunction<Scalar> box_field(const Grid<Scalar>& g, Scalar lo, Scalar hi, Scalar inside = 1,
                               Scalar outside = 0) {
  GridFunction<Scalar> u(g, 1);
  const Scalar eps = g.spacing() * Scalar(1e-9);
  for (int k = 0; k < g.num_nodes(); ++k) {
    const Scalar x = g.node_position(k)[0];
    Scalar v = outside;
    if (x > lo + eps && x < hi - eps) v = inside;
    else if (std::abs(x - lo) <= eps || std::abs(x - hi) <= eps)
      v = (inside + outside) / Scalar(2);
    u.values(0, k) = v;
  }
  return u;
}

template <typename Scalar>
GridFunction<Scalar> sine_field(const Grid<Scalar>& g, int m, int mode = 1, Scalar amp = 1) {
  GridFunction<Scalar> u(g, m);
  const Scalar two_pi = Scalar(2) * Scalar(M_PI);
  for (int k = 0; k < g.num_nodes(); ++k) {
    const PointX<Scalar> p = g.node_position(k);
    Scalar phase = 0;
    for (int d = 0; d < g.dim(); ++d) phase += p[d];
    for (int r = 0; r < m; ++r)
      u.values(r, k) = amp * std::sin(two_pi * Scalar(mode) * phase + Scalar(r));
  }
  return u;
}

// rigid rotation (-x2, x1); lies in the kernel of the symmetric gradient
template <typename Scalar>
GridFunction<Scalar> rotation_field(const Grid<Scalar>& g, Scalar rate = 1) {
  if (g.dim() != 2) throw std::invalid_argument("rotation_field: needs a 2d grid");
  GridFunction<Scalar> u(g, 2);
  for (int k = 0; k < g.num_nodes(); ++k) {
    const PointX<Scalar> p = g.node_position(k);
    u.values(0, k) = -rate * p[1];
    u.values(1, k) = rate * p[0];
  }
  return u;
}

// smooth random field: a few Fourier modes with seeded coefficients; the
// mode cap keeps the optimal dual fields within the divergence budget
template <typename Scalar>
GridFunction<Scalar> random_smooth_field(const Grid<Scalar>& g, int m, std::uint64_t seed,
                                         int max_modes = 3, Scalar amplitude = 1) {
  GridFunction<Scalar> u(g, m);
  SplitMix64 rng(seed);
  const Scalar two_pi = Scalar(2) * Scalar(M_PI);
  for (int r = 0; r < m; ++r) {
    for (int mode = 1; mode <= max_modes; ++mode) {
      const Scalar ax = Scalar(rng.next_symmetric()) * amplitude / Scalar(mode);
      const Scalar px = Scalar(rng.next_uniform()) * two_pi;
      const Scalar ay = Scalar(rng.next_symmetric()) * amplitude / Scalar(mode);
      const Scalar py = Scalar(rng.next_uniform()) * two_pi;
      for (int k = 0; k < g.num_nodes(); ++k) {
        const PointX<Scalar> p = g.node_position(k);
        Scalar v = ax * std::sin(two_pi * Scalar(mode) * p[0] + px);
        if (g.dim() == 2) v += ay * std::sin(two_pi * Scalar(mode) * p[1] + py);
        u.values(r, k) += v;
      }
    }
  }
  return u;
}

} // namespace lgflow
