#include <abcsmc/diagnostics.hpp>
#include <abcsmc/models/normal_mixture.hpp>

#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"

using namespace abcsmc;

namespace {

// Discrepancy is the same constant for every draw.
struct ConstantModel {
  double c = 0.75;
  std::vector<double> obs{0.0};
  [[nodiscard]] std::size_t theta_dim() const { return 1; }
  [[nodiscard]] std::size_t x_dim() const { return 1; }
  [[nodiscard]] std::vector<double> prior_sample(Rng& rng) const { return {uniform01(rng)}; }
  [[nodiscard]] double prior_density(std::span<const double>) const { return 1.0; }
  [[nodiscard]] std::vector<double> simulate(std::span<const double>, Rng&) const { return {c}; }
  [[nodiscard]] double discrepancy(std::span<const double> x, std::span<const double> o) const { return std::abs(x[0] - o[0]); }
  [[nodiscard]] std::span<const double> observed() const { return obs; }
};

StepRecord record(int step, double eps, std::size_t accepted, std::uint64_t sims) {
  StepRecord r;
  r.step = step;
  r.epsilon = eps;
  r.n_accepted = accepted;
  r.n_simulations = sims;
  return r;
}

double trapezoid(const std::vector<double>& grid, const std::vector<double>& f) {
  double total = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) total += 0.5 * (f[i] + f[i - 1]) * (grid[i] - grid[i - 1]);
  return total;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

}  // namespace

TEST(Pilot, TopLevelIsMaximum) {
  const models::NormalMixture model;
  const std::vector<double> levels{1.0};
  const auto r = pilot_threshold(model, 1000, levels, 3);
  EXPECT_EQ(r.epsilons()[0], r.sorted_discrepancies.back());
}

TEST(Pilot, ConstantDiscrepancy) {
  const ConstantModel model;
  const std::vector<double> levels{0.9, 0.5, 0.01, 1e-4};
  for (double e : pilot_threshold(model, 500, levels, 1).epsilons()) EXPECT_EQ(e, 0.75);
}

TEST(Pilot, MixtureQuantileOrdering) {
  const models::NormalMixture model;
  const std::vector<double> levels{0.2, 0.05, 1e-4};
  const auto eps = pilot_threshold(model, 100'000, levels, 4, 4).epsilons();
  // P(|x| < 2) under the prior predictive is about 0.2.
  EXPECT_NEAR(eps[0], 2.0, 0.2);
  EXPECT_LT(eps[2], 0.1);
  EXPECT_LT(eps[2] * 20.0, eps[0]);
}

TEST(Pilot, MonotoneInLevel) {
  const models::MultivariateMixture model(3);
  auto rng = tagged_stream(61, StreamTag::variant);
  for (int trial = 0; trial < 5; ++trial) {
    auto levels = gen::reals(rng, 8, 1e-3, 1.0);
    std::sort(levels.begin(), levels.end());
    const auto eps = pilot_threshold(model, 2000, levels, 10 + trial).epsilons();
    EXPECT_TRUE(std::is_sorted(eps.begin(), eps.end()));
  }
}

TEST(Pilot, ThreadCountDoesNotMatter) {
  const models::MultivariateMixture model(2);
  const std::vector<double> levels{0.5, 0.1, 0.01};
  EXPECT_EQ(pilot_threshold(model, 5000, levels, 9, 1).sorted_discrepancies, pilot_threshold(model, 5000, levels, 9, 3).sorted_discrepancies);
}

TEST(Pilot, Preconditions) {
  const models::NormalMixture model;
  const std::vector<double> ok{0.5};
  const std::vector<double> bad{1.5};
  EXPECT_THROW(pilot_threshold(model, 99, ok, 1), InvalidArgument);
  EXPECT_THROW(pilot_threshold(model, 1000, bad, 1), InvalidArgument);
}

TEST(EfficiencyTable, SingleTraceRejectionStep) {
  const std::vector<VariantTraces> traces{{"smc", {{record(1, 1e9, 100, 100)}}}};
  const auto table = efficiency_table(traces);
  EXPECT_EQ(table.rows[0].per_variant[0].mean, 1.0);
  EXPECT_EQ(table.total_mean[0], 1.0);
}

TEST(EfficiencyTable, MeanMinMax) {
  const std::vector<VariantTraces> traces{{"smc", {{record(1, 2.0, 10, 20), record(2, 1.0, 10, 50)}, {record(1, 2.0, 10, 40), record(2, 1.0, 10, 70)}}},
                                          {"smc_aw", {{record(1, 2.0, 10, 20), record(2, 1.0, 10, 30)}, {record(1, 2.0, 10, 20), record(2, 1.0, 10, 10)}}}};
  const auto t = efficiency_table(traces);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.repeats, 2u);
  EXPECT_EQ(t.rows[0].per_variant[0].mean, 3.0);
  EXPECT_EQ(t.rows[0].per_variant[0].min, 2.0);
  EXPECT_EQ(t.rows[0].per_variant[0].max, 4.0);
  EXPECT_EQ(t.rows[1].per_variant[1].mean, 2.0);
  EXPECT_EQ(t.total_mean[0], 9.0);
  EXPECT_EQ(t.total_mean[1], 4.0);
}

TEST(EfficiencyTable, SchemaChecks) {
  const std::vector<VariantTraces> steps{{"a", {{record(1, 2.0, 10, 20)}, {record(1, 2.0, 10, 20), record(2, 1.0, 10, 20)}}}};
  EXPECT_THROW(efficiency_table(steps), SchemaMismatch);
  const std::vector<VariantTraces> eps{{"a", {{record(1, 2.0, 10, 20)}}}, {"b", {{record(1, 3.0, 10, 20)}}}};
  EXPECT_THROW(efficiency_table(eps), SchemaMismatch);
  const std::vector<VariantTraces> n{{"a", {{record(1, 2.0, 10, 20)}}}, {"b", {{record(1, 2.0, 11, 20)}}}};
  EXPECT_THROW(efficiency_table(n), SchemaMismatch);
  EXPECT_THROW(efficiency_table(std::vector<VariantTraces>{}), SchemaMismatch);
}

TEST(Kde, SingleKernelPeak) {
  const ParticleSystem s({{{0.0}, {0.0}}, {{0.0}, {0.0}}}, {0.5, 0.5}, 1);
  const std::vector<double> grid{0.0};
  EXPECT_NEAR(kde_grid(s, 0, grid, 1.0)[0], 0.3989423, 5e-8);
}

TEST(Kde, IntegratesToOneAndIsSymmetric) {
  const ParticleSystem s({{{-1.0}, {0.0}}, {{0.5}, {0.0}}, {{1.0}, {0.0}}, {{-0.5}, {0.0}}}, {0.3, 0.2, 0.3, 0.2}, 1);
  const auto grid = linspace(-8, 8, 4001);
  const auto d = kde_grid(s, 0, grid, 0.4);
  EXPECT_NEAR(trapezoid(grid, d), 1.0, 0.01);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(d[i], d[grid.size() - 1 - i], 1e-15);
}

TEST(Kde, NonnegativeAndWeightScaleFree) {
  auto rng = tagged_stream(62, StreamTag::variant);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = gen::size(rng, 2, 40);
    const auto s = gen::population(rng, n, 2, 1);
    std::vector<double> doubled;
    for (double w : s.weights()) doubled.push_back(2.0 * w);
    const ParticleSystem s2(std::vector<Particle>(s.particles().begin(), s.particles().end()), normalize(doubled), 1);
    const auto grid = gen::reals(rng, 30, -6, 6);
    const double h = gen::reals(rng, 1, 0.05, 2.0)[0];
    const auto a = kde_grid(s, 1, grid, h);
    const auto b = kde_grid(s2, 1, grid, h);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      EXPECT_GE(a[g], 0.0);
      EXPECT_NEAR(a[g], b[g], 1e-14);
    }
  }
}

TEST(WindowPosterior, NormalizesToOne) {
  for (double eps : {0.025, 0.5, 3.0}) {
    const MixtureWindowPosterior post(eps);
    const auto grid = linspace(-10, 10, 400'001);
    std::vector<double> d;
    for (double g : grid) d.push_back(post.density(g));
    EXPECT_NEAR(trapezoid(grid, d), 1.0, 1e-6) << "eps=" << eps;
    EXPECT_NEAR(post.cdf(0.0), 0.5, 1e-10);
  }
}

TEST(WindowPosterior, MomentsMatchUniformConvolution) {
  // With x_obs = 0 the window posterior is the mixture convolved with U(-eps, eps)
  // (truncation at +-10 is negligible), so the variance is 0.505 + eps^2 / 3.
  for (double eps : {0.025, 0.1, 0.5, 1.0}) {
    const MixtureWindowPosterior post(eps);
    EXPECT_NEAR(post.mean(), 0.0, 1e-10);
    EXPECT_NEAR(post.variance(), 0.505 + eps * eps / 3.0, 1e-9) << "eps=" << eps;
  }
  EXPECT_NEAR(MixtureWindowPosterior(0.025).variance(), 0.5052083, 1e-7);
}

TEST(WindowPosterior, SmallWindowApproachesLimit) {
  const MixtureWindowPosterior post(1e-5);
  const double ratio = post.density(0.0) / post.density(1.0);
  const double limit = mixture_limit_density(0.0) / mixture_limit_density(1.0);
  EXPECT_NEAR(ratio / limit, 1.0, 1e-6);
  for (double t : {-2.0, -0.3, 0.0, 0.05, 1.0}) EXPECT_NEAR(post.density(t) / mixture_limit_density(t), 1.0, 1e-6);
}

TEST(WindowPosterior, WideWindowIsPrior) {
  const MixtureWindowPosterior post(25.0);
  for (double t : linspace(-9, 9, 37)) EXPECT_NEAR(post.density(t), 1.0 / 20.0, 1e-9);
}

TEST(WindowPosterior, WiderWindowsFlattenPeak) {
  const std::vector<double> windows{1.0, 0.5, 0.1, 0.025};
  for (double t : linspace(-0.05, 0.05, 21)) {
    double previous = 0.0;
    for (double eps : windows) {
      const double d = MixtureWindowPosterior(eps).density(t);
      EXPECT_GT(d, previous) << "theta=" << t << " eps=" << eps;
      previous = d;
    }
    EXPECT_LT(previous, mixture_limit_density(t));
  }
  const auto dens = exact_mixture_posterior(0.5, std::vector<double>{-11.0, 0.0, 11.0});
  EXPECT_EQ(dens[0], 0.0);
  EXPECT_EQ(dens[2], 0.0);
  EXPECT_GT(dens[1], 0.0);
}
