#pragma once

#include <abcsmc/errors.hpp>
#include <abcsmc/kernels.hpp>
#include <abcsmc/model.hpp>
#include <abcsmc/parallel.hpp>
#include <abcsmc/particle.hpp>
#include <abcsmc/random.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace abcsmc {

/// Strictly decreasing, positive tolerances eps_1 > ... > eps_T.
class ThresholdSchedule {
 public:
  explicit ThresholdSchedule(std::vector<double> epsilons) : epsilons_(std::move(epsilons)) {
    if (epsilons_.empty()) throw ValidationError("schedule length", "a threshold schedule needs at least one level");
    for (std::size_t t = 0; t < epsilons_.size(); ++t) {
      if (!(epsilons_[t] > 0.0)) throw ValidationError("schedule positivity", "threshold " + std::to_string(t + 1) + " is not positive");
      if (t > 0 && !(epsilons_[t] < epsilons_[t - 1])) {
        throw ValidationError("schedule strictly decreasing", "threshold " + std::to_string(t + 1) + " is not below threshold " + std::to_string(t));
      }
    }
  }

  [[nodiscard]] std::span<const double> epsilons() const noexcept { return epsilons_; }
  [[nodiscard]] std::size_t size() const noexcept { return epsilons_.size(); }
  [[nodiscard]] double operator[](std::size_t t) const { return epsilons_[t]; }

 private:
  std::vector<double> epsilons_;
};

enum class Variant { smc, smc_aw };

inline std::string_view to_string(Variant v) { return v == Variant::smc ? "smc" : "smc_aw"; }

inline Variant parse_variant(std::string_view name) {
  if (name == "smc") return Variant::smc;
  if (name == "smc_aw") return Variant::smc_aw;
  throw InvalidArgument("unknown variant '" + std::string(name) + "'");
}

/// How the data-space kernel for adaptive weights is built each step.
/// uniform_covering uses a box containing every particle's x, which makes
/// the adaptive weights collapse to the plain SMC selection weights.
enum class XKernelMode { gaussian, uniform_covering };

struct RunConfig {
  std::size_t n_particles = 1000;
  Variant variant = Variant::smc;
  std::uint64_t seed = 1;
  std::uint64_t max_attempts_per_particle = 10'000'000;
  unsigned threads = 1;
  bool snapshots = false;
  XKernelMode x_kernel = XKernelMode::gaussian;
  double bandwidth_floor = 1e-8;

  void validate() const {
    if (n_particles < 2) throw ValidationError("N >= 2", "n_particles = " + std::to_string(n_particles));
    if (max_attempts_per_particle < 1) throw ValidationError("attempt cap >= 1", "max_attempts_per_particle = 0");
    if (!(bandwidth_floor > 0.0)) throw ValidationError("bandwidth floor > 0", "bandwidth_floor is not positive");
  }
};

struct StepRecord {
  int step = 0;
  double epsilon = 0.0;
  std::size_t n_accepted = 0;
  std::uint64_t n_simulations = 0;
  std::uint64_t n_prior_rejects = 0;
  double cov_weights = 0.0;
  double seconds = 0.0;
  std::vector<double> theta_bandwidths;
  std::vector<double> x_bandwidths;

  [[nodiscard]] double simulations_per_accepted() const { return static_cast<double>(n_simulations) / static_cast<double>(n_accepted); }
  [[nodiscard]] double acceptance_rate() const { return static_cast<double>(n_accepted) / static_cast<double>(n_simulations); }
};

struct RunTrace {
  Variant variant;
  std::vector<StepRecord> steps;
  ParticleSystem final_population;
  std::vector<ParticleSystem> snapshots;

  [[nodiscard]] double total_simulations_per_accepted() const {
    double total = 0.0;
    for (const auto& s : steps) total += s.simulations_per_accepted();
    return total;
  }
};

/// Equality of everything the sampler computes; wall time and the x-kernel
/// bandwidth log are excluded.
inline bool same_samples(const RunTrace& a, const RunTrace& b) {
  if (a.steps.size() != b.steps.size()) return false;
  for (std::size_t t = 0; t < a.steps.size(); ++t) {
    const auto& s = a.steps[t];
    const auto& r = b.steps[t];
    if (s.step != r.step || s.epsilon != r.epsilon || s.n_accepted != r.n_accepted || s.n_simulations != r.n_simulations ||
        s.n_prior_rejects != r.n_prior_rejects || s.cov_weights != r.cov_weights || s.theta_bandwidths != r.theta_bandwidths) {
      return false;
    }
  }
  return a.final_population == b.final_population && a.snapshots == b.snapshots;
}

struct StepResult {
  ParticleSystem system;
  std::uint64_t simulations = 0;
  std::uint64_t prior_rejects = 0;
};

namespace detail {

struct Draw {
  Particle particle;
  std::uint64_t simulations = 0;
  std::uint64_t prior_rejects = 0;
};

template <AbcModel M>
void check_model(const M& model) {
  if (model.theta_dim() < 1 || model.x_dim() < 1) throw DimensionMismatch("model dimensions must be positive");
  if (model.observed().size() != model.x_dim()) throw DimensionMismatch("observed data does not match the model's data dimension");
}

inline StepResult collect(std::vector<Draw>& draws, std::vector<double> weights, int step) {
  std::uint64_t simulations = 0;
  std::uint64_t prior_rejects = 0;
  std::vector<Particle> particles;
  particles.reserve(draws.size());
  for (auto& d : draws) {
    simulations += d.simulations;
    prior_rejects += d.prior_rejects;
    particles.push_back(std::move(d.particle));
  }
  return StepResult{ParticleSystem(std::move(particles), std::move(weights), step), simulations, prior_rejects};
}

inline double log_sum_exp(std::span<const double> values) {
  double top = -std::numeric_limits<double>::infinity();
  for (double v : values) top = std::max(top, v);
  if (top == -std::numeric_limits<double>::infinity()) return top;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - top);
  return top + std::log(sum);
}

}  // namespace detail

/// Rejection sampling from the prior until N particles satisfy rho(x, x_obs) < eps.
/// Every simulator call counts as one attempt; weights are all 1/N.
template <AbcModel M>
StepResult abc_rejection_init(const M& model, double epsilon, const RunConfig& config, int step = 1) {
  config.validate();
  detail::check_model(model);
  if (!(epsilon > 0.0)) throw InvalidArgument("initial threshold must be positive");
  const auto obs = model.observed();
  std::vector<detail::Draw> draws(config.n_particles);
  parallel_for(config.n_particles, config.threads, [&](std::size_t i) {
    auto rng = particle_stream(config.seed, step, i);
    auto& draw = draws[i];
    while (true) {
      if (draw.simulations + draw.prior_rejects >= config.max_attempts_per_particle) {
        throw AttemptCapExceeded("particle " + std::to_string(i) + " exceeded " + std::to_string(config.max_attempts_per_particle) + " attempts");
      }
      auto theta = model.prior_sample(rng);
      auto x = model.simulate(theta, rng);
      ++draw.simulations;
      if (model.discrepancy(x, obs) < epsilon) {
        draw.particle = Particle{std::move(theta), std::move(x)};
        return;
      }
    }
  });
  std::vector<double> weights(config.n_particles, 1.0 / static_cast<double>(config.n_particles));
  return detail::collect(draws, std::move(weights), step);
}

/// Data-based selection weights v_i proportional to w_i K_x(x_obs | x_i).
///
/// Kernel values are taken relative to the largest one in log space, so a
/// kernel that is constant over the population leaves v == normalize(w)
/// exactly. Throws AllZeroWeights if no particle has positive kernel mass.
inline std::vector<double> compute_adaptive_weights(const ParticleSystem& system, std::span<const double> x_obs, const KernelSpec& kx) {
  if (kx.dim() != system.x_dim() || x_obs.size() != system.x_dim()) throw DimensionMismatch("x kernel, observation and population differ in dimension");
  const auto n = system.size();
  std::vector<double> log_k(n);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    log_k[i] = kernel_log_density(kx, x_obs, system[i].x);
    top = std::max(top, log_k[i]);
  }
  if (top == -std::numeric_limits<double>::infinity()) throw AllZeroWeights("observed data has zero kernel mass under every particle");
  std::vector<double> products(n);
  const auto w = system.weights();
  for (std::size_t i = 0; i < n; ++i) products[i] = w[i] * std::exp(log_k[i] - top);
  return normalize(products);
}

/// Importance weights w_i proportional to p(theta_i) / sum_j s_j K_theta(theta_i | theta_j)
/// where s are the selection weights used to pick the perturbed particles.
/// Evaluated in log space; cost is quadratic in the population size.
template <AbcModel M>
std::vector<double> smc_weight_update(std::span<const std::vector<double>> new_thetas, std::span<const Particle> previous,
                                      std::span<const double> selection_weights, const KernelSpec& k_theta, const M& model,
                                      unsigned threads = 1) {
  if (previous.size() != selection_weights.size()) throw DimensionMismatch("one selection weight per previous particle is required");
  if (previous.empty() || new_thetas.empty()) throw InvalidArgument("weight update needs particles");
  std::vector<std::size_t> support;
  std::vector<double> log_sel;
  for (std::size_t j = 0; j < previous.size(); ++j) {
    if (selection_weights[j] > 0.0) {
      support.push_back(j);
      log_sel.push_back(std::log(selection_weights[j]));
    }
  }
  if (support.empty()) throw AllZeroWeights("selection weights are all zero");

  const bool gaussian = k_theta.kind() == KernelKind::gaussian;
  const auto h = k_theta.bandwidths();
  std::vector<double> inv_h(h.size());
  double log_norm = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    inv_h[k] = 1.0 / h[k];
    log_norm -= std::log(h[k]) + detail::kLogSqrt2Pi;
  }

  std::vector<double> log_w(new_thetas.size());
  parallel_for(new_thetas.size(), threads, [&](std::size_t i) {
    const auto& theta = new_thetas[i];
    if (theta.size() != k_theta.dim()) throw DimensionMismatch("new theta does not match kernel dimension");
    const double prior = model.prior_density(theta);
    if (!(prior > 0.0)) {
      log_w[i] = -std::numeric_limits<double>::infinity();
      return;
    }
    std::vector<double> terms(support.size());
    for (std::size_t s = 0; s < support.size(); ++s) {
      const auto& center = previous[support[s]].theta;
      double log_k;
      if (gaussian) {
        double q = 0.0;
        for (std::size_t k = 0; k < theta.size(); ++k) {
          const double z = (theta[k] - center[k]) * inv_h[k];
          q += z * z;
        }
        log_k = log_norm - 0.5 * q;
      } else {
        log_k = kernel_log_density(k_theta, theta, center);
      }
      terms[s] = log_sel[s] + log_k;
    }
    const double log_den = detail::log_sum_exp(terms);
    log_w[i] = log_den == -std::numeric_limits<double>::infinity() ? -std::numeric_limits<double>::infinity() : std::log(prior) - log_den;
  });
  return normalize_log(log_w);
}

/// One sequential step: for each of N slots, repeatedly pick a previous
/// particle by `selection_weights`, perturb its theta with `k_theta`, and
/// simulate until rho(x, x_obs) < epsilon. Proposals outside the prior
/// support are discarded before simulation and counted as prior rejects.
template <AbcModel M>
StepResult smc_step(const ParticleSystem& previous, std::span<const double> selection_weights, double epsilon, const KernelSpec& k_theta,
                    const M& model, const RunConfig& config) {
  config.validate();
  detail::check_model(model);
  if (selection_weights.size() != previous.size()) throw DimensionMismatch("one selection weight per previous particle is required");
  if (k_theta.dim() != previous.theta_dim()) throw DimensionMismatch("theta kernel does not match parameter dimension");
  if (k_theta.kind() != KernelKind::gaussian) throw UnsupportedKind("perturbation requires a gaussian kernel");
  const int step = previous.step() + 1;
  const auto obs = model.observed();
  const CumulativeWeights picker(selection_weights);
  const auto prev = previous.particles();

  std::vector<detail::Draw> draws(config.n_particles);
  parallel_for(config.n_particles, config.threads, [&](std::size_t i) {
    auto rng = particle_stream(config.seed, step, i);
    auto& draw = draws[i];
    while (true) {
      if (draw.simulations + draw.prior_rejects >= config.max_attempts_per_particle) {
        throw AttemptCapExceeded("particle " + std::to_string(i) + " exceeded " + std::to_string(config.max_attempts_per_particle) + " attempts");
      }
      const auto& source = prev[picker.index(uniform01(rng))];
      auto theta = kernel_sample(k_theta, source.theta, rng);
      if (!(model.prior_density(theta) > 0.0)) {
        ++draw.prior_rejects;
        continue;
      }
      auto x = model.simulate(theta, rng);
      ++draw.simulations;
      if (model.discrepancy(x, obs) < epsilon) {
        draw.particle = Particle{std::move(theta), std::move(x)};
        return;
      }
    }
  });

  std::vector<std::vector<double>> thetas;
  thetas.reserve(draws.size());
  for (const auto& d : draws) thetas.push_back(d.particle.theta);
  auto weights = smc_weight_update(std::span<const std::vector<double>>(thetas), prev, selection_weights, k_theta, model, config.threads);
  return detail::collect(draws, std::move(weights), step);
}

/// Box half-widths that strictly contain every particle's x around x_obs.
inline std::vector<double> covering_half_widths(const ParticleSystem& system, std::span<const double> x_obs) {
  std::vector<double> out(system.x_dim(), 0.0);
  for (const auto& p : system.particles()) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::max(out[k], std::abs(p.x[k] - x_obs[k]));
  }
  for (double& h : out) h = h > 0.0 ? 2.0 * h : 1.0;
  return out;
}

/// Full sampler: rejection initialisation at eps_1 then T - 1 sequential
/// steps. Kernels are rebuilt from the previous population at every step.
/// Errors escaping a step carry that step's index.
template <AbcModel M>
RunTrace run(const M& model, const ThresholdSchedule& schedule, const RunConfig& config) {
  config.validate();
  detail::check_model(model);
  const BandwidthRule rule{static_cast<int>(model.theta_dim() + model.x_dim()), config.bandwidth_floor};
  using clock = std::chrono::steady_clock;

  std::vector<StepRecord> records;
  std::vector<ParticleSystem> snapshots;
  std::optional<ParticleSystem> current;

  for (std::size_t t = 0; t < schedule.size(); ++t) {
    const int step = static_cast<int>(t) + 1;
    const auto start = clock::now();
    StepRecord record;
    record.step = step;
    record.epsilon = schedule[t];
    try {
      std::optional<StepResult> result;
      if (t == 0) {
        result = abc_rejection_init(model, schedule[t], config, step);
      } else {
        const auto& prev = *current;
        record.theta_bandwidths = rule_of_thumb_bandwidths(prev, rule, Block::theta);
        const auto k_theta = KernelSpec::gaussian(record.theta_bandwidths);
        std::vector<double> selection;
        if (config.variant == Variant::smc) {
          selection = normalize(prev.weights());
        } else {
          record.x_bandwidths = config.x_kernel == XKernelMode::gaussian ? rule_of_thumb_bandwidths(prev, rule, Block::x)
                                                                          : covering_half_widths(prev, model.observed());
          const auto kx = config.x_kernel == XKernelMode::gaussian ? KernelSpec::gaussian(record.x_bandwidths)
                                                                    : KernelSpec::uniform(record.x_bandwidths);
          selection = compute_adaptive_weights(prev, model.observed(), kx);
        }
        result = smc_step(prev, selection, schedule[t], k_theta, model, config);
      }
      record.n_accepted = result->system.size();
      record.n_simulations = result->simulations;
      record.n_prior_rejects = result->prior_rejects;
      record.cov_weights = cov_of_weights(result->system.weights());
      current = std::move(result->system);
    } catch (Error& e) {
      e.attach_step(step);
      throw;
    }
    record.seconds = std::chrono::duration<double>(clock::now() - start).count();
    records.push_back(std::move(record));
    if (config.snapshots && t + 1 < schedule.size()) snapshots.push_back(*current);
  }
  return RunTrace{config.variant, std::move(records), std::move(*current), std::move(snapshots)};
}

}  // namespace abcsmc
