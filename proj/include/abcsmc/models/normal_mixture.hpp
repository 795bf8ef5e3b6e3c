#pragma once

#include <abcsmc/errors.hpp>
#include <abcsmc/model.hpp>
#include <abcsmc/random.hpp>

#include <cmath>
#include <span>
#include <vector>

namespace abcsmc::models {

namespace detail {

inline constexpr double kPriorHalfWidth = 10.0;

/// x | theta ~ 0.5 N_p(theta, I) + 0.5 N_p(theta, 0.01 I): one component coin
/// per draw, shared by all coordinates.
inline std::vector<double> draw_mixture(std::span<const double> theta, Rng& rng) {
  const double scale = uniform01(rng) < 0.5 ? 1.0 : 0.1;
  std::vector<double> x(theta.begin(), theta.end());
  for (double& xk : x) xk += scale * standard_normal(rng);
  return x;
}

inline std::vector<double> draw_box_prior(std::size_t p, Rng& rng) {
  std::vector<double> theta(p);
  for (double& t : theta) t = -kPriorHalfWidth + 2.0 * kPriorHalfWidth * uniform01(rng);
  return theta;
}

inline double box_prior_density(std::span<const double> theta) {
  double density = 1.0;
  for (double t : theta) {
    if (!(t >= -kPriorHalfWidth && t <= kPriorHalfWidth)) return 0.0;
    density *= 1.0 / (2.0 * kPriorHalfWidth);
  }
  return density;
}

}  // namespace detail

/// Scalar normal mixture with uniform(-10, 10) prior and |x - x_obs| discrepancy.
class NormalMixture {
 public:
  explicit NormalMixture(double x_obs = 0.0) : observed_{x_obs} {}

  [[nodiscard]] std::size_t theta_dim() const noexcept { return 1; }
  [[nodiscard]] std::size_t x_dim() const noexcept { return 1; }
  [[nodiscard]] std::vector<double> prior_sample(Rng& rng) const { return detail::draw_box_prior(1, rng); }
  [[nodiscard]] double prior_density(std::span<const double> theta) const { return detail::box_prior_density(theta); }
  [[nodiscard]] std::vector<double> simulate(std::span<const double> theta, Rng& rng) const { return detail::draw_mixture(theta, rng); }
  [[nodiscard]] double discrepancy(std::span<const double> x, std::span<const double> x_obs) const { return std::abs(x[0] - x_obs[0]); }
  [[nodiscard]] std::span<const double> observed() const noexcept { return observed_; }

 private:
  std::vector<double> observed_;
};

/// p-dimensional version with uniform [-10, 10]^p prior and squared
/// Euclidean discrepancy. At p = 1 it draws exactly the same values as
/// NormalMixture for the same stream.
class MultivariateMixture {
 public:
  explicit MultivariateMixture(std::size_t p) : MultivariateMixture(std::vector<double>(p, 0.0)) {}
  explicit MultivariateMixture(std::vector<double> x_obs) : observed_(std::move(x_obs)) {
    if (observed_.empty()) throw InvalidArgument("multivariate mixture needs p >= 1");
  }

  [[nodiscard]] std::size_t theta_dim() const noexcept { return observed_.size(); }
  [[nodiscard]] std::size_t x_dim() const noexcept { return observed_.size(); }
  [[nodiscard]] std::vector<double> prior_sample(Rng& rng) const { return detail::draw_box_prior(observed_.size(), rng); }
  [[nodiscard]] double prior_density(std::span<const double> theta) const { return detail::box_prior_density(theta); }
  [[nodiscard]] std::vector<double> simulate(std::span<const double> theta, Rng& rng) const { return detail::draw_mixture(theta, rng); }
  [[nodiscard]] double discrepancy(std::span<const double> x, std::span<const double> x_obs) const { return squared_distance(x, x_obs); }
  [[nodiscard]] std::span<const double> observed() const noexcept { return observed_; }

 private:
  std::vector<double> observed_;
};

inline double normal_mixture_simulate(double theta, Rng& rng) { return detail::draw_mixture(std::span<const double>(&theta, 1), rng)[0]; }

inline std::vector<double> mv_mixture_simulate(std::span<const double> theta, Rng& rng) {
  if (theta.empty()) throw InvalidArgument("multivariate mixture needs p >= 1");
  return detail::draw_mixture(theta, rng);
}

}  // namespace abcsmc::models
