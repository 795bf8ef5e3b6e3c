#pragma once

#include <abcsmc/errors.hpp>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace abcsmc {

/// Sample quantile of already sorted data by linear interpolation between order
/// statistics (Hyndman-Fan type 7): h = (n - 1) * level, value = x[floor h] +
/// (h - floor h) * (x[floor h + 1] - x[floor h]) with 0-based indices.
inline double quantile_sorted(std::span<const double> sorted, double level) {
  if (sorted.empty()) throw InvalidArgument("quantile of empty sample");
  if (!(level >= 0.0 && level <= 1.0)) throw InvalidArgument("quantile level outside [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * level;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline std::vector<double> quantiles(std::vector<double> sample, std::span<const double> levels) {
  std::sort(sample.begin(), sample.end());
  std::vector<double> out;
  out.reserve(levels.size());
  for (double level : levels) out.push_back(quantile_sorted(sample, level));
  return out;
}

}  // namespace abcsmc
