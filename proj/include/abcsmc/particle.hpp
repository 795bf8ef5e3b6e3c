#pragma once

#include <abcsmc/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace abcsmc {

/// Absolute tolerance on the sum of a normalized weight vector.
inline constexpr double kWeightSumTolerance = 1e-12;

struct Particle {
  std::vector<double> theta;
  std::vector<double> x;

  friend bool operator==(const Particle&, const Particle&) = default;
};

/// Rescales nonnegative weights so they sum to one.
inline std::vector<double> normalize(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w)) throw NonFiniteWeight("weight is not finite");
    if (w < 0.0) throw InvalidArgument("weight is negative");
    total += w;
  }
  if (!(total > 0.0)) throw AllZeroWeights("every weight is zero");
  std::vector<double> out(weights.size());
  std::transform(weights.begin(), weights.end(), out.begin(), [total](double w) { return w / total; });
  return out;
}

/// Normalizes weights given as logarithms; -inf entries are zero weights.
inline std::vector<double> normalize_log(std::span<const double> log_weights) {
  double top = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) {
    if (std::isnan(lw) || lw == std::numeric_limits<double>::infinity()) throw NonFiniteWeight("log weight is NaN or +inf");
    top = std::max(top, lw);
  }
  if (top == -std::numeric_limits<double>::infinity()) throw AllZeroWeights("every weight is zero");
  std::vector<double> scaled(log_weights.size());
  std::transform(log_weights.begin(), log_weights.end(), scaled.begin(), [top](double lw) { return std::exp(lw - top); });
  return normalize(scaled);
}

/// Inverse-CDF lookup table over a probability vector.
///
/// index(u) returns the first j with cumulative[j] > u, so zero-weight atoms are
/// never selected. A u beyond the (rounded) total maps to the last positive atom.
class CumulativeWeights {
 public:
  explicit CumulativeWeights(std::span<const double> weights) : cumulative_(weights.size()) {
    if (weights.empty()) throw InvalidArgument("empty weight vector");
    std::partial_sum(weights.begin(), weights.end(), cumulative_.begin());
    last_positive_ = weights.size() - 1;
    while (last_positive_ > 0 && weights[last_positive_] <= 0.0) --last_positive_;
  }

  [[nodiscard]] std::size_t index(double u) const {
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) return last_positive_;
    return static_cast<std::size_t>(it - cumulative_.begin());
  }

 private:
  std::vector<double> cumulative_;
  std::size_t last_positive_;
};

inline std::size_t resample_index(std::span<const double> weights, double u) { return CumulativeWeights(weights).index(u); }

struct Moments {
  double mean;
  double variance;
};

/// Weighted mean and population variance of values under probability weights.
inline Moments weighted_moments(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size()) throw DimensionMismatch("values and weights differ in length");
  double mean = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) mean += weights[i] * values[i];
  double var = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - mean;
    var += weights[i] * d * d;
  }
  return {mean, var};
}

/// Coefficient of variation of a probability vector: population sd over the
/// mean 1/N. Zero iff the weights are uniform; sqrt(N - 1) for a point mass.
inline double cov_of_weights(std::span<const double> weights) {
  if (weights.empty()) throw InvalidArgument("empty weight vector");
  const double n = static_cast<double>(weights.size());
  const double mean = 1.0 / n;
  double ss = 0.0;
  for (double w : weights) ss += (w - mean) * (w - mean);
  return std::sqrt(ss / n) / mean;
}

/// A weighted population of (theta, x) pairs produced by one sampler step.
///
/// Invariants (checked on construction): at least two particles, constant theta
/// and x dimensions, finite entries, and weights that are nonnegative and sum
/// to one within kWeightSumTolerance.
class ParticleSystem {
 public:
  ParticleSystem(std::vector<Particle> particles, std::vector<double> weights, int step)
      : particles_(std::move(particles)), weights_(std::move(weights)), step_(step) {
    validate();
  }

  [[nodiscard]] std::size_t size() const noexcept { return particles_.size(); }
  [[nodiscard]] std::size_t theta_dim() const noexcept { return particles_.front().theta.size(); }
  [[nodiscard]] std::size_t x_dim() const noexcept { return particles_.front().x.size(); }
  [[nodiscard]] int step() const noexcept { return step_; }
  [[nodiscard]] std::span<const Particle> particles() const noexcept { return particles_; }
  [[nodiscard]] std::span<const double> weights() const noexcept { return weights_; }
  [[nodiscard]] const Particle& operator[](std::size_t i) const { return particles_[i]; }

  [[nodiscard]] std::vector<double> theta_column(std::size_t dim) const { return column(dim, &Particle::theta); }
  [[nodiscard]] std::vector<double> x_column(std::size_t dim) const { return column(dim, &Particle::x); }

  friend bool operator==(const ParticleSystem&, const ParticleSystem&) = default;

 private:
  std::vector<double> column(std::size_t dim, std::vector<double> Particle::*block) const {
    std::vector<double> out;
    out.reserve(particles_.size());
    for (const auto& p : particles_) {
      const auto& values = p.*block;
      if (dim >= values.size()) throw DimensionMismatch("dimension index out of range");
      out.push_back(values[dim]);
    }
    return out;
  }

  void validate() const {
    if (particles_.size() < 2) throw InvalidArgument("a particle system needs at least two particles");
    if (weights_.size() != particles_.size()) throw DimensionMismatch("one weight per particle is required");
    const auto p = particles_.front().theta.size();
    const auto q = particles_.front().x.size();
    for (const auto& particle : particles_) {
      if (particle.theta.size() != p || particle.x.size() != q) throw DimensionMismatch("particle dimensions differ within a population");
      auto finite = [](double v) { return std::isfinite(v); };
      if (!std::all_of(particle.theta.begin(), particle.theta.end(), finite) || !std::all_of(particle.x.begin(), particle.x.end(), finite)) {
        throw InvalidArgument("particle has a non-finite entry");
      }
    }
    double total = 0.0;
    for (double w : weights_) {
      if (!std::isfinite(w) || w < 0.0) throw NonFiniteWeight("weights must be finite and nonnegative");
      total += w;
    }
    if (std::abs(total - 1.0) > kWeightSumTolerance) throw InvalidArgument("weights are not normalized");
  }

  std::vector<Particle> particles_;
  std::vector<double> weights_;
  int step_;
};

inline Moments weighted_moments(const ParticleSystem& system, std::size_t dim) {
  return weighted_moments(system.theta_column(dim), system.weights());
}

}  // namespace abcsmc
