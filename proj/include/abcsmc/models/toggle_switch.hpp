#pragma once

#include <abcsmc/errors.hpp>
#include <abcsmc/model.hpp>
#include <abcsmc/quantile.hpp>
#include <abcsmc/random.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace abcsmc::models {

struct ToggleSwitchParams {
  double alpha_u;
  double alpha_v;
  double beta_u;
  double beta_v;
  double mu;
  double sigma;
  double gamma;

  static ToggleSwitchParams from(std::span<const double> theta) {
    if (theta.size() != 7) throw DimensionMismatch("toggle switch has 7 parameters");
    return {theta[0], theta[1], theta[2], theta[3], theta[4], theta[5], theta[6]};
  }

  [[nodiscard]] std::vector<double> to_vector() const { return {alpha_u, alpha_v, beta_u, beta_v, mu, sigma, gamma}; }
};

struct ToggleSwitchSettings {
  std::size_t cells = 2000;
  double horizon = 300.0;
  double step = 1.0;
  double initial_state = 10.0;

  [[nodiscard]] std::size_t steps() const {
    if (!(step > 0.0) || !(horizon > 0.0)) throw InvalidArgument("toggle switch needs positive step and horizon");
    const double n = std::round(horizon / step);
    if (std::abs(n * step - horizon) > 1e-9 * horizon) throw InvalidArgument("toggle switch horizon must be a multiple of the step");
    return static_cast<std::size_t>(n);
  }
};

namespace detail {

// Floor on u^gamma's base in the measurement equation.
inline constexpr double kMeasurementFloor = 0.01;

inline double toggle_update(double self, double other, double alpha, double beta, double h, double noise) {
  const double next = self + h * alpha / (1.0 + std::pow(other, beta)) - h * (1.0 + 0.03 * self) + h * 0.5 * noise;
  return std::max(next, 0.0);
}

}  // namespace detail

/// One step of the noise-free (xi = 0) state recursion, returning (u, v).
inline std::array<double, 2> toggle_switch_skeleton_step(const ToggleSwitchParams& p, double u, double v, double h) {
  return {detail::toggle_update(u, v, p.alpha_u, p.beta_u, h, 0.0), detail::toggle_update(v, u, p.alpha_v, p.beta_v, h, 0.0)};
}

/// Simulates `cells` independent trajectories of the discrete-time toggle
/// switch and returns the noisy measurements y_c of u at the horizon.
///
/// States are clamped at 0 after every step; u^gamma in the measurement uses
/// max(u, 0.01). Each cell draws (xi_u, xi_v) per step, then its eta.
inline std::vector<double> toggle_switch_simulate(const ToggleSwitchParams& p, const ToggleSwitchSettings& settings, Rng& rng) {
  const std::size_t steps = settings.steps();
  const double h = settings.step;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> y(settings.cells);
  for (std::size_t c = 0; c < settings.cells; ++c) {
    double u = settings.initial_state;
    double v = settings.initial_state;
    for (std::size_t t = 0; t < steps; ++t) {
      const double xi_u = normal(rng);
      const double xi_v = normal(rng);
      const double next_u = detail::toggle_update(u, v, p.alpha_u, p.beta_u, h, xi_u);
      const double next_v = detail::toggle_update(v, u, p.alpha_v, p.beta_v, h, xi_v);
      u = next_u;
      v = next_v;
    }
    if (!std::isfinite(u) || !std::isfinite(v)) throw NonFiniteState("toggle switch trajectory diverged");
    const double eta = normal(rng);
    y[c] = u + p.mu + p.mu * p.sigma * eta / std::pow(std::max(u, detail::kMeasurementFloor), p.gamma);
    if (!std::isfinite(y[c])) throw NonFiniteState("toggle switch measurement is not finite");
  }
  return y;
}

inline constexpr std::size_t kToggleSummaryDim = 11;

/// Surrogate signature: 9 deciles (type-7 quantiles), mean and population sd.
inline std::vector<double> toggle_raw_summary(std::vector<double> y) {
  if (y.size() < kToggleSummaryDim) throw InvalidArgument("toggle summary needs at least 11 measurements");
  std::sort(y.begin(), y.end());
  std::vector<double> out;
  out.reserve(kToggleSummaryDim);
  for (int k = 1; k <= 9; ++k) out.push_back(quantile_sorted(y, k / 10.0));
  const double n = static_cast<double>(y.size());
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  out.push_back(mean);
  out.push_back(std::sqrt(ss / n));
  return out;
}

/// Location/scale constants applied to each raw summary coordinate.
struct SummaryStandardization {
  std::vector<double> location = std::vector<double>(kToggleSummaryDim, 0.0);
  std::vector<double> scale = std::vector<double>(kToggleSummaryDim, 1.0);

  void validate() const {
    if (location.size() != kToggleSummaryDim || scale.size() != kToggleSummaryDim) throw DimensionMismatch("toggle summary constants need 11 entries");
    for (double s : scale) {
      if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("toggle summary scales must be positive");
    }
  }
};

inline std::vector<double> toggle_summary(std::vector<double> y, const SummaryStandardization& standardization) {
  auto x = toggle_raw_summary(std::move(y));
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = (x[k] - standardization.location[k]) / standardization.scale[k];
  return x;
}

/// Independent uniform prior on a box.
struct UniformBox {
  std::vector<double> lower;
  std::vector<double> upper;

  void validate(std::size_t dim) const {
    if (lower.size() != dim || upper.size() != dim) throw DimensionMismatch("prior box has the wrong dimension");
    for (std::size_t k = 0; k < dim; ++k) {
      if (!(lower[k] < upper[k])) throw InvalidArgument("prior box needs lower < upper");
    }
  }

  [[nodiscard]] std::vector<double> sample(Rng& rng) const {
    std::vector<double> out(lower.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = lower[k] + (upper[k] - lower[k]) * uniform01(rng);
    return out;
  }

  [[nodiscard]] double density(std::span<const double> theta) const {
    double d = 1.0;
    for (std::size_t k = 0; k < lower.size(); ++k) {
      if (!(theta[k] >= lower[k] && theta[k] <= upper[k])) return 0.0;
      d /= upper[k] - lower[k];
    }
    return d;
  }
};

/// Default prior ranges for (alpha_u, alpha_v, beta_u, beta_v, mu, sigma, gamma).
inline UniformBox default_toggle_prior() {
  return {{0.0, 0.0, 0.0, 0.0, 250.0, 0.0, 0.0}, {50.0, 50.0, 5.0, 5.0, 450.0, 0.5, 0.4}};
}

inline ToggleSwitchParams default_toggle_truth() { return {22.0, 12.0, 4.0, 4.5, 325.0, 0.25, 0.15}; }

/// Toggle switch model over the standardized surrogate summary with
/// squared-difference discrepancy. sigma must stay positive, so the prior's
/// sigma range is treated as open at 0.
class ToggleSwitch {
 public:
  ToggleSwitch(std::vector<double> x_obs, ToggleSwitchSettings settings = {}, UniformBox prior = default_toggle_prior(),
               SummaryStandardization standardization = {})
      : observed_(std::move(x_obs)), settings_(settings), prior_(std::move(prior)), standardization_(std::move(standardization)) {
    prior_.validate(7);
    standardization_.validate();
    static_cast<void>(settings_.steps());
    if (settings_.cells < kToggleSummaryDim) throw InvalidArgument("toggle switch needs at least 11 cells");
    if (observed_.size() != kToggleSummaryDim) throw DimensionMismatch("toggle observations are 11 summaries");
  }

  [[nodiscard]] std::size_t theta_dim() const noexcept { return 7; }
  [[nodiscard]] std::size_t x_dim() const noexcept { return kToggleSummaryDim; }
  [[nodiscard]] std::vector<double> prior_sample(Rng& rng) const {
    auto theta = prior_.sample(rng);
    if (theta[5] <= 0.0) theta[5] = prior_.upper[5];  // zero has probability 2^-53
    return theta;
  }
  [[nodiscard]] double prior_density(std::span<const double> theta) const { return theta[5] > 0.0 ? prior_.density(theta) : 0.0; }
  [[nodiscard]] std::vector<double> simulate(std::span<const double> theta, Rng& rng) const {
    return toggle_summary(toggle_switch_simulate(ToggleSwitchParams::from(theta), settings_, rng), standardization_);
  }
  [[nodiscard]] double discrepancy(std::span<const double> x, std::span<const double> x_obs) const { return squared_distance(x, x_obs); }
  [[nodiscard]] std::span<const double> observed() const noexcept { return observed_; }

  [[nodiscard]] const ToggleSwitchSettings& settings() const noexcept { return settings_; }
  [[nodiscard]] const UniformBox& prior() const noexcept { return prior_; }
  [[nodiscard]] const SummaryStandardization& standardization() const noexcept { return standardization_; }

 private:
  std::vector<double> observed_;
  ToggleSwitchSettings settings_;
  UniformBox prior_;
  SummaryStandardization standardization_;
};

/// Location (mean) and scale (sd) of raw summaries under prior-predictive
/// simulation; used to standardize the toggle summary coordinates.
inline SummaryStandardization calibrate_toggle_summary(const ToggleSwitchSettings& settings, const UniformBox& prior, std::size_t draws,
                                                       std::uint64_t seed) {
  if (draws < 2) throw InvalidArgument("calibration needs at least two draws");
  std::vector<std::vector<double>> summaries;
  summaries.reserve(draws);
  for (std::size_t i = 0; i < draws; ++i) {
    auto rng = tagged_stream(seed, StreamTag::calibration, i);
    auto theta = prior.sample(rng);
    if (theta[5] <= 0.0) theta[5] = prior.upper[5];
    summaries.push_back(toggle_raw_summary(toggle_switch_simulate(ToggleSwitchParams::from(theta), settings, rng)));
  }
  SummaryStandardization out;
  for (std::size_t k = 0; k < kToggleSummaryDim; ++k) {
    double mean = 0.0;
    for (const auto& s : summaries) mean += s[k];
    mean /= static_cast<double>(draws);
    double ss = 0.0;
    for (const auto& s : summaries) ss += (s[k] - mean) * (s[k] - mean);
    out.location[k] = mean;
    out.scale[k] = std::max(std::sqrt(ss / static_cast<double>(draws)), 1e-12);
  }
  return out;
}

}  // namespace abcsmc::models
