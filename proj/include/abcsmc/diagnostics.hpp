#pragma once

#include <abcsmc/engine.hpp>
#include <abcsmc/errors.hpp>
#include <abcsmc/model.hpp>
#include <abcsmc/particle.hpp>
#include <abcsmc/quantile.hpp>
#include <abcsmc/random.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace abcsmc {

// ---------------------------------------------------------------------------
// Threshold pilot studies

struct PilotResult {
  std::vector<double> sorted_discrepancies;
  std::vector<std::pair<double, double>> quantile_map;  // (level, epsilon)

  [[nodiscard]] std::vector<double> epsilons() const {
    std::vector<double> out;
    for (const auto& [level, eps] : quantile_map) out.push_back(eps);
    return out;
  }
};

/// Simulates `samples` prior:model pairs, records their discrepancies to the
/// observed data, and reads off type-7 empirical quantiles at `levels`.
template <AbcModel M>
PilotResult pilot_threshold(const M& model, std::size_t samples, std::span<const double> levels, std::uint64_t seed, unsigned threads = 1) {
  if (samples < 100) throw InvalidArgument("pilot study needs at least 100 samples");
  for (double level : levels) {
    if (!(level > 0.0 && level <= 1.0)) throw InvalidArgument("pilot quantile levels must lie in (0, 1]");
  }
  const auto obs = model.observed();
  std::vector<double> d(samples);
  parallel_for(samples, threads, [&](std::size_t i) {
    auto rng = tagged_stream(seed, StreamTag::pilot, i);
    const auto theta = model.prior_sample(rng);
    d[i] = model.discrepancy(model.simulate(theta, rng), obs);
  });
  std::sort(d.begin(), d.end());
  PilotResult out;
  for (double level : levels) out.quantile_map.emplace_back(level, quantile_sorted(d, level));
  out.sorted_discrepancies = std::move(d);
  return out;
}

// ---------------------------------------------------------------------------
// Efficiency accounting

struct SpreadStat {
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

/// Simulations per accepted particle, per step and variant, summarized over
/// repeats. total_mean[v] is the sum of the per-step means for variant v.
struct EfficiencyTable {
  struct Row {
    int step;
    double epsilon;
    std::vector<SpreadStat> per_variant;
  };

  std::vector<std::string> variants;
  std::vector<Row> rows;
  std::vector<double> total_mean;
  std::size_t repeats = 0;
};

struct VariantTraces {
  std::string name;
  std::vector<std::vector<StepRecord>> repeats;
};

inline EfficiencyTable efficiency_table(std::span<const VariantTraces> traces) {
  if (traces.empty() || traces.front().repeats.empty()) throw SchemaMismatch("efficiency table needs at least one trace");
  const auto& reference = traces.front().repeats.front();
  EfficiencyTable table;
  table.repeats = traces.front().repeats.size();
  for (const auto& variant : traces) {
    if (variant.repeats.empty()) throw SchemaMismatch("variant '" + variant.name + "' has no traces");
    for (const auto& steps : variant.repeats) {
      if (steps.size() != reference.size()) throw SchemaMismatch("traces differ in number of steps");
      for (std::size_t t = 0; t < steps.size(); ++t) {
        if (steps[t].step != reference[t].step || steps[t].epsilon != reference[t].epsilon) throw SchemaMismatch("traces differ in schedule");
        if (steps[t].n_accepted != reference[t].n_accepted) throw SchemaMismatch("traces differ in population size");
        if (steps[t].n_accepted == 0) throw SchemaMismatch("trace step has no accepted particles");
      }
    }
    table.variants.push_back(variant.name);
  }
  table.total_mean.assign(traces.size(), 0.0);
  for (std::size_t t = 0; t < reference.size(); ++t) {
    EfficiencyTable::Row row{reference[t].step, reference[t].epsilon, {}};
    for (std::size_t v = 0; v < traces.size(); ++v) {
      SpreadStat stat{std::numeric_limits<double>::infinity(), 0.0, -std::numeric_limits<double>::infinity()};
      for (const auto& steps : traces[v].repeats) {
        const double value = steps[t].simulations_per_accepted();
        stat.min = std::min(stat.min, value);
        stat.max = std::max(stat.max, value);
        stat.mean += value;
      }
      stat.mean /= static_cast<double>(traces[v].repeats.size());
      table.total_mean[v] += stat.mean;
      row.per_variant.push_back(stat);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

/// Paired (smc, smc_aw) runs.
inline EfficiencyTable efficiency_table(std::span<const std::pair<RunTrace, RunTrace>> pairs) {
  std::vector<VariantTraces> traces(2);
  traces[0].name = std::string(to_string(Variant::smc));
  traces[1].name = std::string(to_string(Variant::smc_aw));
  for (const auto& [smc, aw] : pairs) {
    traces[0].repeats.push_back(smc.steps);
    traces[1].repeats.push_back(aw.steps);
  }
  return efficiency_table(traces);
}

// ---------------------------------------------------------------------------
// Density export

/// Weighted gaussian kernel density estimate of theta[dim] on a grid.
inline std::vector<double> kde_grid(const ParticleSystem& system, std::size_t dim, std::span<const double> grid, double bandwidth) {
  if (!(bandwidth > 0.0)) throw InvalidArgument("kde bandwidth must be positive");
  const auto values = system.theta_column(dim);
  const auto w = system.weights();
  const double norm = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2 / bandwidth;
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double z = (grid[g] - values[i]) / bandwidth;
      total += w[i] * std::exp(-0.5 * z * z);
    }
    out[g] = norm * total;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exact posterior for the scalar normal mixture

/// Posterior of theta given |x - x_obs| < eps for x | theta ~ 0.5 N(theta, 1) +
/// 0.5 N(theta, 0.01) and theta ~ U(-10, 10): density proportional to
/// Pr(|x - x_obs| < eps | theta), normalized by adaptive Gauss-Kronrod
/// quadrature. As eps -> 0 this tends to the mixture 0.5 N(x_obs, 1) +
/// 0.5 N(x_obs, 0.01) truncated to (-10, 10).
class MixtureWindowPosterior {
 public:
  static constexpr double kLower = -10.0;
  static constexpr double kUpper = 10.0;
  static constexpr double kAbsTolerance = 1e-8;

  explicit MixtureWindowPosterior(double epsilon, double x_obs = 0.0) : epsilon_(epsilon), x_obs_(x_obs) {
    if (!(epsilon > 0.0)) throw InvalidArgument("window half-width must be positive");
    normalizer_ = integrate([this](double t) { return acceptance_probability(t); }, kLower, kUpper);
    mean_ = integrate([this](double t) { return t * acceptance_probability(t); }, kLower, kUpper) / normalizer_;
    variance_ = integrate([this](double t) { return (t - mean_) * (t - mean_) * acceptance_probability(t); }, kLower, kUpper) / normalizer_;
  }

  /// Pr(|x - x_obs| < eps | theta) for the two-component mixture.
  [[nodiscard]] double acceptance_probability(double theta) const {
    const double lo = x_obs_ - epsilon_ - theta;
    const double hi = x_obs_ + epsilon_ - theta;
    return 0.5 * normal_mass(lo, hi) + 0.5 * normal_mass(lo / 0.1, hi / 0.1);
  }

  [[nodiscard]] double density(double theta) const {
    if (!(theta >= kLower && theta <= kUpper)) return 0.0;
    return acceptance_probability(theta) / normalizer_;
  }

  [[nodiscard]] double cdf(double c) const {
    if (c <= kLower) return 0.0;
    if (c >= kUpper) return 1.0;
    return integrate([this](double t) { return acceptance_probability(t); }, kLower, c) / normalizer_;
  }

  [[nodiscard]] double normalizer() const noexcept { return normalizer_; }
  [[nodiscard]] double mean() const noexcept { return mean_; }
  [[nodiscard]] double variance() const noexcept { return variance_; }
  [[nodiscard]] double epsilon() const noexcept { return epsilon_; }

 private:
  // Phi(hi) - Phi(lo) without cancellation in either tail.
  static double normal_mass(double lo, double hi) {
    constexpr double r = std::numbers::sqrt2 / 2.0;
    if (lo >= 0.0) return 0.5 * (std::erfc(lo * r) - std::erfc(hi * r));
    if (hi <= 0.0) return 0.5 * (std::erfc(-hi * r) - std::erfc(-lo * r));
    return 1.0 - 0.5 * std::erfc(hi * r) - 0.5 * std::erfc(-lo * r);
  }

  // Integrates over [a, b] split at the mixture's scale changes so the
  // adaptive rule sees smooth pieces.
  template <typename F>
  double integrate(F f, double a, double b) const {
    std::vector<double> cuts{a, b};
    for (double c : {-3.0, -1.0, -0.3, 0.0, 0.3, 1.0, 3.0}) {
      for (double s : {x_obs_ + c, x_obs_ + c - epsilon_, x_obs_ + c + epsilon_}) {
        if (s > a && s < b) cuts.push_back(s);
      }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      double error = 0.0;
      total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, cuts[i], cuts[i + 1], 15, 1e-13, &error);
      if (error > kAbsTolerance) throw Error("quadrature did not reach the requested tolerance");
    }
    return total;
  }

  double epsilon_;
  double x_obs_;
  double normalizer_ = 0.0;
  double mean_ = 0.0;
  double variance_ = 0.0;
};

inline std::vector<double> exact_mixture_posterior(double epsilon, std::span<const double> grid) {
  const MixtureWindowPosterior posterior(epsilon);
  std::vector<double> out;
  out.reserve(grid.size());
  for (double g : grid) out.push_back(posterior.density(g));
  return out;
}

/// Limit (eps -> 0) density: 0.5 N(0, 1) + 0.5 N(0, 0.01) truncated to (-10, 10).
inline double mixture_limit_density(double theta) {
  if (!(theta > -10.0 && theta < 10.0)) return 0.0;
  const double c = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
  const double wide = c * std::exp(-0.5 * theta * theta);
  const double narrow = c / 0.1 * std::exp(-0.5 * theta * theta / 0.01);
  // Truncation removes mass only from the wide component (about 1.5e-23).
  return 0.5 * wide + 0.5 * narrow;
}

}  // namespace abcsmc
