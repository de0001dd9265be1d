// Seeded fat-Cantor-type sets, realized per grid resolution.
//
// The set is a finite union of closed cell-aligned intervals covering exactly
// half of the cells. Placement follows the usual Cantor recursion (split a
// block, leave a middle gap, recurse), with the gap schedule shrinking
// geometrically so the bottom-level intervals are one or two cells wide.
#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace lgflow {

class CantorSet {
public:
  CantorSet() = default;

  // Marks exactly cells/2 (rounded down) of `cells` cells on (0, extent).
  static CantorSet build(std::uint64_t seed, int cells, double extent = 1.0) {
    if (cells < 2) throw std::invalid_argument("CantorSet: need at least 2 cells");
    CantorSet set;
    set.cells_ = cells;
    set.extent_ = extent;
    std::vector<char> mark(static_cast<std::size_t>(cells), 0);
    std::mt19937_64 rng(seed);
    place(mark, 0, cells, cells / 2, rng);
    // merge marked cells into closed intervals
    const double h = extent / cells;
    int i = 0;
    while (i < cells) {
      if (!mark[i]) { ++i; continue; }
      int j = i;
      while (j < cells && mark[j]) ++j;
      set.intervals_.emplace_back(i * h, j * h);
      i = j;
    }
    return set;
  }

  bool contains(double x) const {
    auto it = std::upper_bound(intervals_.begin(), intervals_.end(), x,
                               [](double v, const std::pair<double, double>& iv) {
                                 return v < iv.first;
                               });
    if (it == intervals_.begin()) return false;
    --it;
    return x >= it->first && x <= it->second;
  }

  double measure() const {
    double s = 0;
    for (const auto& iv : intervals_) s += iv.second - iv.first;
    return s;
  }

  const std::vector<std::pair<double, double>>& intervals() const { return intervals_; }
  int resolution() const { return cells_; }
  double extent() const { return extent_; }

private:
  // Mark `want` cells inside [lo, hi) by even bisection; the density stays
  // balanced at every scale, so the bottom-level intervals are one cell wide
  // (two where runs meet across block borders). The seed decides where odd
  // remainders go.
  static void place(std::vector<char>& mark, int lo, int hi, int want,
                    std::mt19937_64& rng) {
    const int len = hi - lo;
    if (want <= 0) return;
    if (want >= len) {
      std::fill(mark.begin() + lo, mark.begin() + hi, char(1));
      return;
    }
    if (len <= 2) { // want == 1
      mark[(rng() & 1u) ? hi - 1 : lo] = 1;
      return;
    }
    const int left_len = len / 2;
    const int right_len = len - left_len;
    int left_want = want / 2;
    if ((want & 1) && (rng() & 1u)) ++left_want;
    left_want = std::min(left_want, left_len);
    left_want = std::max(left_want, want - right_len);
    place(mark, lo, lo + left_len, left_want, rng);
    place(mark, lo + left_len, hi, want - left_want, rng);
  }

  std::vector<std::pair<double, double>> intervals_;
  int cells_ = 0;
  double extent_ = 1.0;
};

} // namespace lgflow
