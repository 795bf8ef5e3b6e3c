#pragma once

#include <abcsmc/errors.hpp>
#include <abcsmc/model.hpp>
#include <abcsmc/quantile.hpp>
#include <abcsmc/random.hpp>

#include <array>
#include <cmath>
#include <random>
#include <span>
#include <vector>

namespace abcsmc::models {

/// Service times ~ Uniform[service_min, service_max], inter-arrival times ~
/// Exponential(arrival_rate).
struct QueueParams {
  double service_min;
  double service_max;
  double arrival_rate;

  void validate() const {
    if (!(service_min >= 0.0 && service_min <= service_max)) throw InvalidArgument("queue needs 0 <= service_min <= service_max");
    if (!(arrival_rate > 0.0)) throw InvalidArgument("queue arrival rate must be positive");
  }
};

/// Inter-departure times of a single-server FCFS queue from inter-arrival gaps
/// W and service times U, evaluated left to right with running sums:
///   Y_r = U_r                          if sum_{i<=r} W_i <= sum_{i<r} Y_i
///   Y_r = U_r + sum_{i<=r} W_i - sum_{i<r} Y_i   otherwise.
inline std::vector<double> mg1_departure_recursion(std::span<const double> arrival_gaps, std::span<const double> service_times) {
  if (arrival_gaps.size() != service_times.size()) throw LengthMismatch("arrival gaps and service times differ in length");
  std::vector<double> departures_gaps(arrival_gaps.size());
  double arrivals = 0.0;
  double departures = 0.0;
  for (std::size_t r = 0; r < arrival_gaps.size(); ++r) {
    if (arrival_gaps[r] < 0.0 || service_times[r] < 0.0) throw InvalidArgument("queue times must be nonnegative");
    arrivals += arrival_gaps[r];
    const double y = arrivals <= departures ? service_times[r] : service_times[r] + arrivals - departures;
    departures_gaps[r] = y;
    departures += y;
  }
  return departures_gaps;
}

/// (min, 25%, 50%, 75%, max) of the inter-departure times.
inline std::vector<double> mg1_summary(std::vector<double> inter_departures) {
  static constexpr std::array<double, 5> kLevels{0.0, 0.25, 0.5, 0.75, 1.0};
  return quantiles(std::move(inter_departures), kLevels);
}

/// Draws W then U for each customer in turn and returns the five summaries.
inline std::vector<double> mg1_simulate(const QueueParams& params, std::size_t customers, Rng& rng) {
  params.validate();
  if (customers < 5) throw InvalidArgument("queue simulation needs at least 5 customers");
  std::exponential_distribution<double> gap(params.arrival_rate);
  std::vector<double> w(customers);
  std::vector<double> u(customers);
  for (std::size_t r = 0; r < customers; ++r) {
    w[r] = gap(rng);
    u[r] = params.service_min + (params.service_max - params.service_min) * uniform01(rng);
  }
  return mg1_summary(mg1_departure_recursion(w, u));
}

/// M/G/1 queue model. theta = (service_min, service_max, arrival_rate), prior
/// (theta1, theta2 - theta1, theta3) uniform on [0, 10]^3 (theta3 > 0), and
/// squared-difference discrepancy on the five summaries.
class Mg1Queue {
 public:
  static constexpr double kPriorWidth = 10.0;

  explicit Mg1Queue(std::vector<double> x_obs, std::size_t customers = 50) : observed_(std::move(x_obs)), customers_(customers) {
    if (observed_.size() != 5) throw DimensionMismatch("queue observations are 5 summaries");
    if (customers_ < 5) throw InvalidArgument("queue simulation needs at least 5 customers");
  }

  [[nodiscard]] std::size_t theta_dim() const noexcept { return 3; }
  [[nodiscard]] std::size_t x_dim() const noexcept { return 5; }
  [[nodiscard]] std::size_t customers() const noexcept { return customers_; }

  [[nodiscard]] std::vector<double> prior_sample(Rng& rng) const {
    const double t1 = kPriorWidth * uniform01(rng);
    const double t2 = t1 + kPriorWidth * uniform01(rng);
    const double t3 = kPriorWidth * (1.0 - uniform01(rng));
    return {t1, t2, t3};
  }

  [[nodiscard]] double prior_density(std::span<const double> theta) const {
    const double gap = theta[1] - theta[0];
    const bool inside = theta[0] >= 0.0 && theta[0] <= kPriorWidth && gap >= 0.0 && gap <= kPriorWidth && theta[2] > 0.0 &&
                        theta[2] <= kPriorWidth;
    return inside ? 1.0 / (kPriorWidth * kPriorWidth * kPriorWidth) : 0.0;
  }

  [[nodiscard]] std::vector<double> simulate(std::span<const double> theta, Rng& rng) const {
    return mg1_simulate(QueueParams{theta[0], theta[1], theta[2]}, customers_, rng);
  }

  [[nodiscard]] double discrepancy(std::span<const double> x, std::span<const double> x_obs) const { return squared_distance(x, x_obs); }
  [[nodiscard]] std::span<const double> observed() const noexcept { return observed_; }

 private:
  std::vector<double> observed_;
  std::size_t customers_;
};

}  // namespace abcsmc::models
