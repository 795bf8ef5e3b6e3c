#include <abcsmc/model.hpp>
#include <abcsmc/models/mg1_queue.hpp>
#include <abcsmc/models/normal_mixture.hpp>
#include <abcsmc/models/toggle_switch.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "generators.hpp"

using namespace abcsmc;
using namespace abcsmc::models;

namespace {

double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Event-driven single-server queue: track each customer's arrival and
// departure clock times, then difference the departure times.
std::vector<double> event_driven_queue(const std::vector<double>& gaps, const std::vector<double>& service) {
  std::vector<double> out;
  double clock_arrival = 0.0;
  double last_departure = 0.0;
  for (std::size_t r = 0; r < gaps.size(); ++r) {
    clock_arrival += gaps[r];
    const double start = std::max(clock_arrival, last_departure);
    const double departure = start + service[r];
    out.push_back(departure - last_departure);
    last_departure = departure;
  }
  return out;
}

ToggleSwitchSettings small_toggle(std::size_t cells = 50, double horizon = 30.0) {
  ToggleSwitchSettings s;
  s.cells = cells;
  s.horizon = horizon;
  return s;
}

// Direct transcription of the toggle recursion, consuming the stream in the
// same order as the simulator; returns the horizon states u and the etas.
struct ToggleOracle {
  std::vector<double> u;
  std::vector<double> eta;
};

ToggleOracle toggle_oracle(const ToggleSwitchParams& p, const ToggleSwitchSettings& s, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ToggleOracle out;
  const double h = s.step;
  for (std::size_t c = 0; c < s.cells; ++c) {
    double u = s.initial_state;
    double v = s.initial_state;
    for (std::size_t t = 0; t < s.steps(); ++t) {
      const double a = normal(rng);
      const double b = normal(rng);
      const double nu = std::max(u + h * p.alpha_u / (1.0 + std::pow(v, p.beta_u)) - h * (1.0 + 0.03 * u) + h * 0.5 * a, 0.0);
      const double nv = std::max(v + h * p.alpha_v / (1.0 + std::pow(u, p.beta_v)) - h * (1.0 + 0.03 * v) + h * 0.5 * b, 0.0);
      u = nu;
      v = nv;
    }
    out.u.push_back(u);
    out.eta.push_back(normal(rng));
  }
  return out;
}

template <AbcModel M>
void check_model_contract(const M& model, int draws, std::uint64_t seed) {
  for (int i = 0; i < draws; ++i) {
    auto rng = tagged_stream(seed, StreamTag::variant, i);
    const auto theta = model.prior_sample(rng);
    ASSERT_EQ(theta.size(), model.theta_dim());
    EXPECT_GT(model.prior_density(theta), 0.0);
    auto r1 = tagged_stream(seed, StreamTag::data, i);
    auto r2 = tagged_stream(seed, StreamTag::data, i);
    const auto x1 = model.simulate(theta, r1);
    const auto x2 = model.simulate(theta, r2);
    ASSERT_EQ(x1.size(), model.x_dim());
    EXPECT_EQ(x1, x2);
    EXPECT_GE(model.discrepancy(x1, model.observed()), 0.0);
    EXPECT_EQ(model.discrepancy(x1, x1), 0.0);
  }
}

}  // namespace

TEST(NormalMixture, MeanAtTheta) {
  auto rng = tagged_stream(31, StreamTag::variant);
  double s = 0.0;
  for (int i = 0; i < 100'000; ++i) s += normal_mixture_simulate(3.0, rng);
  EXPECT_NEAR(s / 1e5, 3.0, 0.02);
}

TEST(NormalMixture, VarianceIsMixtureVariance) {
  for (double theta : {-4.0, 0.0, 7.5}) {
    auto rng = tagged_stream(32, StreamTag::variant, static_cast<std::uint64_t>(theta + 10));
    double s = 0.0;
    double ss = 0.0;
    for (int i = 0; i < 100'000; ++i) {
      const double d = normal_mixture_simulate(theta, rng) - theta;
      s += d;
      ss += d * d;
    }
    const double var = ss / 1e5 - (s / 1e5) * (s / 1e5);
    EXPECT_NEAR(var, 0.5 * 1.0 + 0.5 * 0.01, 0.02 * 0.505);
  }
}

TEST(NormalMixture, WindowMass) {
  auto rng = tagged_stream(33, StreamTag::variant);
  const double oracle = 0.5 * (2.0 * phi(0.3) - 1.0) + 0.5 * (2.0 * phi(3.0) - 1.0);
  EXPECT_NEAR(oracle, 0.616, 1e-3);
  int hits = 0;
  for (int i = 0; i < 100'000; ++i) hits += std::abs(normal_mixture_simulate(0.0, rng)) < 0.3;
  EXPECT_NEAR(hits / 1e5, oracle, 0.006);
}

TEST(MvMixture, CovarianceAtP2) {
  auto rng = tagged_stream(34, StreamTag::variant);
  const std::vector<double> theta{1.0, -2.0};
  const int n = 100'000;
  double s0 = 0, s1 = 0, s00 = 0, s11 = 0, s01 = 0;
  for (int i = 0; i < n; ++i) {
    const auto x = mv_mixture_simulate(theta, rng);
    s0 += x[0];
    s1 += x[1];
    s00 += x[0] * x[0];
    s11 += x[1] * x[1];
    s01 += x[0] * x[1];
  }
  const double m0 = s0 / n, m1 = s1 / n;
  EXPECT_NEAR(s00 / n - m0 * m0, 0.505, 0.03 * 0.505);
  EXPECT_NEAR(s11 / n - m1 * m1, 0.505, 0.03 * 0.505);
  EXPECT_LT(std::abs(s01 / n - m0 * m1), 0.01);
}

TEST(MvMixture, SingleCoinPerDraw) {
  // Both coordinates share a component, so |x0| and |x1| are positively correlated.
  auto rng = tagged_stream(35, StreamTag::variant);
  const std::vector<double> theta{0.0, 0.0};
  int both_small = 0;
  for (int i = 0; i < 50'000; ++i) {
    const auto x = mv_mixture_simulate(theta, rng);
    both_small += std::abs(x[0]) < 0.3 && std::abs(x[1]) < 0.3;
  }
  const double shared = 0.5 * std::pow(2 * phi(0.3) - 1, 2) + 0.5 * std::pow(2 * phi(3.0) - 1, 2);
  EXPECT_NEAR(both_small / 5e4, shared, 0.01);
}

TEST(MvMixture, ReducesToScalarAtP1) {
  const NormalMixture scalar(0.0);
  const MultivariateMixture vector(1);
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    auto r1 = tagged_stream(seed, StreamTag::variant);
    auto r2 = tagged_stream(seed, StreamTag::variant);
    for (int i = 0; i < 20; ++i) {
      EXPECT_EQ(scalar.prior_sample(r1), vector.prior_sample(r2));
      const std::vector<double> theta{0.5 * i - 3.0};
      EXPECT_EQ(scalar.simulate(theta, r1), vector.simulate(theta, r2));
    }
  }
  const std::vector<double> a{0.5};
  const std::vector<double> b{-1.5};
  EXPECT_EQ(scalar.discrepancy(a, b), 2.0);
  EXPECT_EQ(vector.discrepancy(a, b), 4.0);
  EXPECT_EQ(vector.discrepancy(b, b), 0.0);
}

TEST(Models, ContractHolds) {
  check_model_contract(NormalMixture(0.3), 500, 36);
  check_model_contract(MultivariateMixture(5), 500, 37);
  check_model_contract(Mg1Queue({1, 2, 3, 4, 5}), 500, 38);
  check_model_contract(ToggleSwitch(std::vector<double>(11, 0.0), small_toggle(20, 10.0)), 100, 39);
}

TEST(Models, TypeErasedSpecForwards) {
  const ModelSpec spec(Mg1Queue({1, 2, 3, 4, 5}, 40), "mg1_queue");
  EXPECT_EQ(spec.name(), "mg1_queue");
  EXPECT_EQ(spec.theta_dim(), 3u);
  EXPECT_EQ(spec.x_dim(), 5u);
  const Mg1Queue direct({1, 2, 3, 4, 5}, 40);
  auto r1 = tagged_stream(40, StreamTag::variant);
  auto r2 = tagged_stream(40, StreamTag::variant);
  const auto t1 = spec.prior_sample(r1);
  EXPECT_EQ(t1, direct.prior_sample(r2));
  EXPECT_EQ(spec.simulate(t1, r1), direct.simulate(t1, r2));
}

TEST(Mg1Queue, RecursionExamples) {
  EXPECT_EQ(mg1_departure_recursion(std::vector<double>{1, 1}, std::vector<double>{2, 3}), (std::vector<double>{3, 3}));
  EXPECT_EQ(mg1_departure_recursion(std::vector<double>{1, 5}, std::vector<double>{2, 1}), (std::vector<double>{3, 4}));
  const std::vector<double> u{0.5, 2.0, 1.25, 3.0};
  EXPECT_EQ(mg1_departure_recursion(std::vector<double>(4, 0.0), u), u);
  EXPECT_THROW(mg1_departure_recursion(std::vector<double>{1}, std::vector<double>{1, 2}), LengthMismatch);
}

TEST(Mg1Queue, MatchesEventDrivenOracle) {
  auto rng = tagged_stream(41, StreamTag::variant);
  for (int instance = 0; instance < 100; ++instance) {
    const auto n = gen::size(rng, 1, 80);
    const auto w = gen::reals(rng, n, 0.0, gen::reals(rng, 1, 0.1, 5.0)[0]);
    const auto u = gen::reals(rng, n, 0.0, gen::reals(rng, 1, 0.1, 5.0)[0]);
    const auto y = mg1_departure_recursion(w, u);
    const auto oracle = event_driven_queue(w, u);
    ASSERT_EQ(y.size(), oracle.size());
    for (std::size_t r = 0; r < n; ++r) EXPECT_NEAR(y[r], oracle[r], 1e-12) << "instance " << instance << " customer " << r;
  }
}

TEST(Mg1Queue, DeterministicServiceSaturatedArrivals) {
  auto rng = tagged_stream(42, StreamTag::variant);
  const auto x = mg1_simulate(QueueParams{2.5, 2.5, 1e6}, 50, rng);
  for (double v : x) EXPECT_NEAR(v, 2.5, 1e-3);
}

TEST(Mg1Queue, SummariesAreOrdered) {
  const Mg1Queue model({1, 2, 3, 4, 5});
  for (int i = 0; i < 500; ++i) {
    auto rng = tagged_stream(43, StreamTag::variant, i);
    const auto x = model.simulate(model.prior_sample(rng), rng);
    EXPECT_TRUE(std::is_sorted(x.begin(), x.end()));
  }
}

TEST(Mg1Queue, PriorSupport) {
  const Mg1Queue model({1, 2, 3, 4, 5});
  EXPECT_GT(model.prior_density(std::vector<double>{1, 5, 0.2}), 0.0);
  EXPECT_EQ(model.prior_density(std::vector<double>{5, 1, 0.2}), 0.0);
  EXPECT_EQ(model.prior_density(std::vector<double>{1, 12, 0.2}), 0.0);
  EXPECT_EQ(model.prior_density(std::vector<double>{1, 5, 0.0}), 0.0);
  EXPECT_EQ(model.prior_density(std::vector<double>{-0.1, 5, 0.2}), 0.0);
  EXPECT_DOUBLE_EQ(model.prior_density(std::vector<double>{1, 5, 0.2}), 1e-3);
}

TEST(ToggleSwitch, SkeletonStep) {
  ToggleSwitchParams p = default_toggle_truth();
  p.alpha_u = 20.0;
  p.beta_u = 2.0;
  const auto [u1, v1] = toggle_switch_skeleton_step(p, 10.0, 10.0, 1.0);
  EXPECT_NEAR(u1, 10.0 + 20.0 / 101.0 - 1.3, 1e-12);
  EXPECT_NEAR(u1, 8.89802, 5e-6);
  EXPECT_NEAR(v1, 10.0 + p.alpha_v / (1.0 + std::pow(10.0, p.beta_v)) - 1.3, 1e-12);
}

TEST(ToggleSwitch, SkeletonReproducible) {
  const auto trajectory = [](const ToggleSwitchParams& p) {
    std::array<double, 2> state{10.0, 10.0};
    std::vector<double> out;
    for (int t = 0; t < 300; ++t) {
      state = toggle_switch_skeleton_step(p, state[0], state[1], 1.0);
      out.push_back(state[0]);
      out.push_back(state[1]);
    }
    return out;
  };
  const auto a = trajectory(default_toggle_truth());
  const auto b = trajectory(default_toggle_truth());
  EXPECT_EQ(a, b);
  for (double v : a) EXPECT_GE(v, 0.0);
}

TEST(ToggleSwitch, SimulatorMatchesTranscription) {
  const auto s = small_toggle(40, 50.0);
  auto p = default_toggle_truth();
  auto r1 = tagged_stream(44, StreamTag::variant);
  auto r2 = tagged_stream(44, StreamTag::variant);
  const auto y = toggle_switch_simulate(p, s, r1);
  const auto oracle = toggle_oracle(p, s, r2);
  for (std::size_t c = 0; c < s.cells; ++c) {
    const double expected = oracle.u[c] + p.mu + p.mu * p.sigma * oracle.eta[c] / std::pow(std::max(oracle.u[c], 0.01), p.gamma);
    EXPECT_DOUBLE_EQ(y[c], expected);
  }
}

TEST(ToggleSwitch, NoiseFreeMeasurement) {
  const auto s = small_toggle(30, 20.0);
  auto p = default_toggle_truth();
  p.sigma = 0.0;
  auto r1 = tagged_stream(45, StreamTag::variant);
  auto r2 = tagged_stream(45, StreamTag::variant);
  const auto y = toggle_switch_simulate(p, s, r1);
  const auto oracle = toggle_oracle(p, s, r2);
  for (std::size_t c = 0; c < s.cells; ++c) EXPECT_EQ(y[c], oracle.u[c] + p.mu);
}

TEST(ToggleSwitch, UnitScaleMeasurement) {
  const auto s = small_toggle(30, 20.0);
  auto p = default_toggle_truth();
  p.gamma = 0.0;
  p.mu = 1.0;
  p.sigma = 1.0;
  auto r1 = tagged_stream(46, StreamTag::variant);
  auto r2 = tagged_stream(46, StreamTag::variant);
  const auto y = toggle_switch_simulate(p, s, r1);
  const auto oracle = toggle_oracle(p, s, r2);
  for (std::size_t c = 0; c < s.cells; ++c) EXPECT_EQ(y[c], oracle.u[c] + 1.0 + oracle.eta[c]);
}

TEST(ToggleSwitch, StatesStayNonnegative) {
  // Strong decay and large noise push the unclamped recursion below zero.
  const auto s = small_toggle(200, 20.0);
  ToggleSwitchParams p{0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.2};
  auto rng = tagged_stream(47, StreamTag::variant);
  const auto y = toggle_switch_simulate(p, s, rng);
  for (double v : y) EXPECT_GE(v, 0.0);
}

TEST(ToggleSummary, ConstantInput) {
  const auto x = toggle_raw_summary(std::vector<double>(100, 7.5));
  for (int k = 0; k < 10; ++k) EXPECT_DOUBLE_EQ(x[k], 7.5);
  EXPECT_EQ(x[10], 0.0);
}

TEST(ToggleSummary, DecilesOfRamp) {
  std::vector<double> y(2000);
  std::iota(y.begin(), y.end(), 1.0);
  const auto x = toggle_raw_summary(y);
  ASSERT_EQ(x.size(), kToggleSummaryDim);
  for (int k = 1; k <= 9; ++k) EXPECT_NEAR(x[k - 1], 1.0 + 1999.0 * k / 10.0, 1e-9);
  EXPECT_NEAR(x[0], 200.9, 1e-9);
  EXPECT_NEAR(x[1], 400.8, 1e-9);
  EXPECT_NEAR(x[8], 1800.1, 1e-9);
  EXPECT_DOUBLE_EQ(x[9], 1000.5);
  EXPECT_NEAR(x[10], std::sqrt((2000.0 * 2000.0 - 1.0) / 12.0), 1e-9);
}

TEST(ToggleSummary, PermutationInvariant) {
  auto rng = tagged_stream(48, StreamTag::variant);
  for (int trial = 0; trial < 50; ++trial) {
    auto y = gen::reals(rng, gen::size(rng, 11, 500), 0, 1000);
    const auto x = toggle_raw_summary(y);
    std::shuffle(y.begin(), y.end(), rng);
    const auto x2 = toggle_raw_summary(y);
    for (std::size_t k = 0; k < 9; ++k) EXPECT_EQ(x[k], x2[k]);
    EXPECT_NEAR(x[9], x2[9], 1e-9);
    EXPECT_NEAR(x[10], x2[10], 1e-9);
  }
}

TEST(ToggleSummary, Standardization) {
  SummaryStandardization st;
  st.location.assign(11, 2.0);
  st.scale.assign(11, 4.0);
  const auto x = toggle_summary(std::vector<double>(20, 10.0), st);
  for (int k = 0; k < 10; ++k) EXPECT_DOUBLE_EQ(x[k], 2.0);
  EXPECT_DOUBLE_EQ(x[10], -0.5);
  st.scale[3] = 0.0;
  EXPECT_THROW(st.validate(), InvalidArgument);
}

TEST(ToggleSwitch, CalibrationIsSeeded) {
  const auto s = small_toggle(20, 10.0);
  const auto a = calibrate_toggle_summary(s, default_toggle_prior(), 30, 9);
  const auto b = calibrate_toggle_summary(s, default_toggle_prior(), 30, 9);
  EXPECT_EQ(a.location, b.location);
  EXPECT_EQ(a.scale, b.scale);
  for (double v : a.scale) EXPECT_GT(v, 0.0);
}

TEST(ToggleSwitch, RejectsBadSettings) {
  EXPECT_THROW(ToggleSwitch(std::vector<double>(10, 0.0), small_toggle()), DimensionMismatch);
  EXPECT_THROW(ToggleSwitch(std::vector<double>(11, 0.0), small_toggle(5)), InvalidArgument);
  ToggleSwitchSettings bad = small_toggle();
  bad.step = 0.7;
  EXPECT_THROW(ToggleSwitch(std::vector<double>(11, 0.0), bad), InvalidArgument);
}
