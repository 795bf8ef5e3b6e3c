#pragma once

#include <abcsmc/errors.hpp>
#include <abcsmc/particle.hpp>
#include <abcsmc/random.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace abcsmc {

enum class KernelKind { gaussian, uniform };

/// Diagonal product kernel. For the gaussian kind the bandwidths are standard
/// deviations; for the uniform kind they are box half-widths.
class KernelSpec {
 public:
  KernelSpec(KernelKind kind, std::vector<double> bandwidths) : kind_(kind), bandwidths_(std::move(bandwidths)) {
    if (bandwidths_.empty()) throw InvalidArgument("kernel needs at least one dimension");
    for (double h : bandwidths_) {
      if (!std::isfinite(h) || !(h > 0.0)) throw InvalidArgument("kernel bandwidths must be positive and finite");
    }
  }

  static KernelSpec gaussian(std::vector<double> bandwidths) { return {KernelKind::gaussian, std::move(bandwidths)}; }
  static KernelSpec uniform(std::vector<double> half_widths) { return {KernelKind::uniform, std::move(half_widths)}; }

  [[nodiscard]] KernelKind kind() const noexcept { return kind_; }
  [[nodiscard]] std::span<const double> bandwidths() const noexcept { return bandwidths_; }
  [[nodiscard]] std::size_t dim() const noexcept { return bandwidths_.size(); }

 private:
  KernelKind kind_;
  std::vector<double> bandwidths_;
};

namespace detail {

inline void check_dims(const KernelSpec& spec, std::span<const double> point, std::span<const double> center) {
  if (point.size() != spec.dim() || center.size() != spec.dim()) {
    throw DimensionMismatch("kernel of dimension " + std::to_string(spec.dim()) + " evaluated at point of dimension " +
                            std::to_string(point.size()) + " with center of dimension " + std::to_string(center.size()));
  }
}

inline constexpr double kInvSqrt2Pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

}  // namespace detail

/// Density of the product kernel centred at `center`, evaluated at `point`.
///
/// Computed as a plain product of the one-dimensional factors, so a product
/// kernel equals the product of its marginals bit for bit.
inline double kernel_density(const KernelSpec& spec, std::span<const double> point, std::span<const double> center) {
  detail::check_dims(spec, point, center);
  const auto h = spec.bandwidths();
  double density = 1.0;
  if (spec.kind() == KernelKind::gaussian) {
    for (std::size_t k = 0; k < h.size(); ++k) {
      const double z = (point[k] - center[k]) / h[k];
      density *= std::exp(-0.5 * z * z) * detail::kInvSqrt2Pi / h[k];
    }
  } else {
    for (std::size_t k = 0; k < h.size(); ++k) {
      if (!(std::abs(point[k] - center[k]) < h[k])) return 0.0;
      density *= 0.5 / h[k];
    }
  }
  return density;
}

/// Log of kernel_density; -inf outside a uniform kernel's support.
inline double kernel_log_density(const KernelSpec& spec, std::span<const double> point, std::span<const double> center) {
  detail::check_dims(spec, point, center);
  const auto h = spec.bandwidths();
  double log_density = 0.0;
  if (spec.kind() == KernelKind::gaussian) {
    for (std::size_t k = 0; k < h.size(); ++k) {
      const double z = (point[k] - center[k]) / h[k];
      log_density -= 0.5 * z * z + std::log(h[k]) + detail::kLogSqrt2Pi;
    }
  } else {
    for (std::size_t k = 0; k < h.size(); ++k) {
      if (!(std::abs(point[k] - center[k]) < h[k])) return -std::numeric_limits<double>::infinity();
      log_density -= std::log(2.0 * h[k]);
    }
  }
  return log_density;
}

/// Perturbs `center` with independent normal noise of per-dimension scale h_k.
inline std::vector<double> kernel_sample(const KernelSpec& spec, std::span<const double> center, Rng& rng) {
  if (spec.kind() != KernelKind::gaussian) throw UnsupportedKind("perturbation requires a gaussian kernel");
  if (center.size() != spec.dim()) throw DimensionMismatch("kernel and center differ in dimension");
  std::vector<double> out(center.begin(), center.end());
  const auto h = spec.bandwidths();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += h[k] * standard_normal(rng);
  return out;
}

inline double weighted_std(std::span<const double> values, std::span<const double> weights) {
  return std::sqrt(weighted_moments(values, weights).variance);
}

/// Rule-of-thumb bandwidth configuration: h_k = max(sd_k * N^(-1/(d+4)), floor_k)
/// with floor_k = relative_floor * (1 + |weighted mean_k|).
struct BandwidthRule {
  int total_dim;
  double relative_floor = 1e-8;

  void validate() const {
    if (total_dim < 1) throw InvalidArgument("bandwidth rule needs total dimension >= 1");
    if (!(relative_floor > 0.0)) throw InvalidArgument("bandwidth floor must be positive");
  }
};

enum class Block { theta, x };

/// Per-dimension rule-of-thumb bandwidths from weighted columns.
inline std::vector<double> rule_of_thumb_bandwidths(std::span<const std::vector<double>> columns, std::span<const double> weights,
                                                    const BandwidthRule& rule) {
  rule.validate();
  const auto n = weights.size();
  if (n < 2) throw InvalidArgument("rule-of-thumb bandwidths need at least two particles");
  const double shrink = std::pow(static_cast<double>(n), -1.0 / (rule.total_dim + 4.0));
  std::vector<double> out;
  out.reserve(columns.size());
  bool any_spread = false;
  for (const auto& column : columns) {
    const auto [mean, variance] = weighted_moments(column, weights);
    const double sd = std::sqrt(variance);
    any_spread = any_spread || sd > 0.0;
    out.push_back(std::max(sd * shrink, rule.relative_floor * (1.0 + std::abs(mean))));
  }
  if (!any_spread) throw DegeneratePopulation("every dimension of the population has zero spread");
  return out;
}

inline std::vector<double> rule_of_thumb_bandwidths(const ParticleSystem& system, const BandwidthRule& rule, Block which) {
  const auto dims = which == Block::theta ? system.theta_dim() : system.x_dim();
  std::vector<std::vector<double>> columns;
  columns.reserve(dims);
  for (std::size_t k = 0; k < dims; ++k) columns.push_back(which == Block::theta ? system.theta_column(k) : system.x_column(k));
  return rule_of_thumb_bandwidths(columns, system.weights(), rule);
}

}  // namespace abcsmc
