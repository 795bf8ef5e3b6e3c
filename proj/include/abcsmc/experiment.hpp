#pragma once

// Experiment orchestration: YAML configuration, model selection by name,
// repeated paired runs, and file output. Requires yaml-cpp.

#include <abcsmc/abcsmc.hpp>

#include <yaml-cpp/yaml.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace abcsmc::experiment {

inline constexpr const char* kVersion = "0.1.0";

struct PilotRecipe {
  std::size_t samples = 100'000;
  std::vector<double> quantiles;
};

struct DensityGrid {
  std::size_t points = 201;
  double lower = -3.0;
  double upper = 3.0;
  double bandwidth = 0.0;  // 0: rule-of-thumb from the final population
};

struct ModelConfig {
  std::string name;
  std::size_t dim = 1;
  std::optional<std::vector<double>> x_obs;
  std::optional<std::vector<double>> truth;
  std::size_t customers = 50;
  models::ToggleSwitchSettings toggle;
  models::UniformBox toggle_prior = models::default_toggle_prior();
  std::optional<models::SummaryStandardization> summary;
  std::size_t calibration_samples = 200;
};

struct ExperimentConfig {
  ModelConfig model;
  std::vector<double> epsilons;
  std::optional<PilotRecipe> pilot;
  std::size_t particles = 1000;
  std::vector<Variant> variants{Variant::smc, Variant::smc_aw};
  std::size_t repeats = 1;
  std::uint64_t seed = 1;
  std::string output = "out";
  bool snapshots = false;
  unsigned threads = 1;
  std::uint64_t max_attempts = 10'000'000;
  XKernelMode x_kernel = XKernelMode::gaussian;
  bool new_data_per_repeat = true;
  std::optional<DensityGrid> density;

  // Filled in by resolve_config.
  bool resolved = false;
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline int line_of(const YAML::Node& node) { return node.Mark().is_null() ? -1 : node.Mark().line + 1; }

template <typename T>
T as(const YAML::Node& node, const std::string& field) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception& e) {
    throw ParseError(e.msg, e.mark.is_null() ? line_of(node) : e.mark.line + 1, field);
  }
}

inline void check_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& section) {
  if (!node.IsMap()) throw ParseError("expected a mapping", line_of(node), section);
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) throw ParseError("unknown key", line_of(kv.first), section.empty() ? key : section + "." + key);
  }
}

template <typename T>
void read(const YAML::Node& parent, const char* key, T& out, const std::string& section) {
  if (const auto node = parent[key]) out = as<T>(node, section.empty() ? key : section + "." + key);
}

inline XKernelMode parse_x_kernel(const std::string& s) {
  if (s == "gaussian") return XKernelMode::gaussian;
  if (s == "uniform_covering") return XKernelMode::uniform_covering;
  throw ValidationError("x_kernel in {gaussian, uniform_covering}", "got '" + s + "'");
}

inline std::string to_string(XKernelMode m) { return m == XKernelMode::gaussian ? "gaussian" : "uniform_covering"; }

// Shortest round-trip text, so emitted documents read 0.025 rather than 0.025000000000000001.
inline std::string num(double v) { return io::format_double(v); }
inline std::vector<std::string> nums(const std::vector<double>& v) {
  std::vector<std::string> out;
  for (double x : v) out.push_back(num(x));
  return out;
}

}  // namespace detail

inline void validate(const ExperimentConfig& c) {
  static const std::set<std::string> kModels{"normal_mixture", "mv_mixture", "toggle_switch", "mg1_queue"};
  if (!kModels.contains(c.model.name)) throw ValidationError("model name is known", "unknown model '" + c.model.name + "'");
  if (c.repeats < 1) throw ValidationError("repeats >= 1", "repeats = " + std::to_string(c.repeats));
  if (c.particles < 2) throw ValidationError("N >= 2", "particles = " + std::to_string(c.particles));
  if (c.variants.empty()) throw ValidationError("at least one variant", "variants is empty");
  if (c.max_attempts < 1) throw ValidationError("attempt cap >= 1", "max_attempts = 0");
  if (c.model.x_obs && c.model.truth) throw ValidationError("x_obs or truth, not both", "both given for the model");
  if (c.model.name == "mv_mixture" && c.model.dim < 1) throw ValidationError("mv_mixture dim >= 1", "dim = 0");
  if (c.epsilons.empty() && !c.pilot) throw ValidationError("schedule given", "need schedule.epsilons or schedule.pilot");
  if (!c.epsilons.empty()) static_cast<void>(ThresholdSchedule(c.epsilons));
  if (c.pilot) {
    if (c.pilot->samples < 100) throw ValidationError("pilot samples >= 100", "samples = " + std::to_string(c.pilot->samples));
    if (c.pilot->quantiles.empty()) throw ValidationError("pilot quantiles given", "schedule.pilot.quantiles is empty");
    for (std::size_t i = 0; i < c.pilot->quantiles.size(); ++i) {
      const double q = c.pilot->quantiles[i];
      if (!(q > 0.0 && q < 1.0)) throw ValidationError("pilot quantiles in (0, 1)", "got " + io::format_double(q));
      if (i > 0 && !(q < c.pilot->quantiles[i - 1])) throw ValidationError("pilot quantiles strictly decreasing", "schedule.pilot.quantiles");
    }
  }
  if (c.model.name == "toggle_switch") {
    static_cast<void>(c.model.toggle.steps());
    c.model.toggle_prior.validate(7);
    if (c.model.summary) c.model.summary->validate();
  }
  if (c.density && (c.density->points < 2 || !(c.density->lower < c.density->upper))) {
    throw ValidationError("density grid has >= 2 points over a nonempty range", "density");
  }
}

/// Parses a YAML experiment document. Syntax and type problems raise
/// ParseError with a line number; semantic problems raise ValidationError.
inline ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ParseError(e.msg, e.mark.is_null() ? -1 : e.mark.line + 1, "");
  }
  if (!root || root.IsNull()) throw ParseError("empty configuration", -1, "");
  using detail::read;
  detail::check_keys(root,
                     {"model", "schedule", "particles", "variants", "repeats", "seed", "output", "snapshots", "threads", "max_attempts", "x_kernel",
                      "new_data_per_repeat", "density", "version"},
                     "");
  ExperimentConfig c;

  const auto model = root["model"];
  if (!model) throw ParseError("missing section", -1, "model");
  detail::check_keys(model,
                     {"name", "dim", "x_obs", "truth", "customers", "cells", "horizon", "step_size", "prior", "summary", "calibration_samples"},
                     "model");
  if (!model["name"]) throw ParseError("missing key", detail::line_of(model), "model.name");
  read(model, "name", c.model.name, "model");
  read(model, "dim", c.model.dim, "model");
  if (model["x_obs"]) c.model.x_obs = detail::as<std::vector<double>>(model["x_obs"], "model.x_obs");
  if (model["truth"]) c.model.truth = detail::as<std::vector<double>>(model["truth"], "model.truth");
  read(model, "customers", c.model.customers, "model");
  read(model, "cells", c.model.toggle.cells, "model");
  read(model, "horizon", c.model.toggle.horizon, "model");
  read(model, "step_size", c.model.toggle.step, "model");
  read(model, "calibration_samples", c.model.calibration_samples, "model");
  if (const auto prior = model["prior"]) {
    detail::check_keys(prior, {"lower", "upper"}, "model.prior");
    read(prior, "lower", c.model.toggle_prior.lower, "model.prior");
    read(prior, "upper", c.model.toggle_prior.upper, "model.prior");
  }
  if (const auto summary = model["summary"]) {
    detail::check_keys(summary, {"location", "scale"}, "model.summary");
    models::SummaryStandardization s;
    read(summary, "location", s.location, "model.summary");
    read(summary, "scale", s.scale, "model.summary");
    c.model.summary = s;
  }

  const auto schedule = root["schedule"];
  if (!schedule) throw ParseError("missing section", -1, "schedule");
  detail::check_keys(schedule, {"epsilons", "pilot"}, "schedule");
  read(schedule, "epsilons", c.epsilons, "schedule");
  if (const auto pilot = schedule["pilot"]) {
    detail::check_keys(pilot, {"samples", "quantiles"}, "schedule.pilot");
    PilotRecipe recipe;
    read(pilot, "samples", recipe.samples, "schedule.pilot");
    read(pilot, "quantiles", recipe.quantiles, "schedule.pilot");
    c.pilot = recipe;
  }

  read(root, "particles", c.particles, "");
  if (const auto variants = root["variants"]) {
    c.variants.clear();
    for (const auto& v : detail::as<std::vector<std::string>>(variants, "variants")) {
      try {
        c.variants.push_back(parse_variant(v));
      } catch (const InvalidArgument&) {
        throw ValidationError("variant in {smc, smc_aw}", "got '" + v + "'");
      }
    }
  }
  read(root, "repeats", c.repeats, "");
  read(root, "seed", c.seed, "");
  read(root, "output", c.output, "");
  read(root, "snapshots", c.snapshots, "");
  read(root, "threads", c.threads, "");
  read(root, "max_attempts", c.max_attempts, "");
  read(root, "new_data_per_repeat", c.new_data_per_repeat, "");
  if (const auto xk = root["x_kernel"]) c.x_kernel = detail::parse_x_kernel(detail::as<std::string>(xk, "x_kernel"));
  if (const auto density = root["density"]) {
    detail::check_keys(density, {"points", "lower", "upper", "bandwidth"}, "density");
    DensityGrid grid;
    read(density, "points", grid.points, "density");
    read(density, "lower", grid.lower, "density");
    read(density, "upper", grid.upper, "density");
    read(density, "bandwidth", grid.bandwidth, "density");
    c.density = grid;
  }
  validate(c);
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open configuration file '" + path.string() + "'", -1, "");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

/// Serializes a configuration so that parse_config(to_yaml(c)) == c.
inline std::string to_yaml(const ExperimentConfig& c) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << c.model.name;
  if (c.model.name == "mv_mixture") out << YAML::Key << "dim" << YAML::Value << c.model.dim;
  if (c.model.x_obs) out << YAML::Key << "x_obs" << YAML::Value << YAML::Flow << detail::nums(*c.model.x_obs);
  if (c.model.truth) out << YAML::Key << "truth" << YAML::Value << YAML::Flow << detail::nums(*c.model.truth);
  if (c.model.name == "mg1_queue") out << YAML::Key << "customers" << YAML::Value << c.model.customers;
  if (c.model.name == "toggle_switch") {
    out << YAML::Key << "cells" << YAML::Value << c.model.toggle.cells;
    out << YAML::Key << "horizon" << YAML::Value << detail::num(c.model.toggle.horizon);
    out << YAML::Key << "step_size" << YAML::Value << detail::num(c.model.toggle.step);
    out << YAML::Key << "calibration_samples" << YAML::Value << c.model.calibration_samples;
    out << YAML::Key << "prior" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "lower" << YAML::Value << YAML::Flow << detail::nums(c.model.toggle_prior.lower);
    out << YAML::Key << "upper" << YAML::Value << YAML::Flow << detail::nums(c.model.toggle_prior.upper);
    out << YAML::EndMap;
    if (c.model.summary) {
      out << YAML::Key << "summary" << YAML::Value << YAML::BeginMap;
      out << YAML::Key << "location" << YAML::Value << YAML::Flow << detail::nums(c.model.summary->location);
      out << YAML::Key << "scale" << YAML::Value << YAML::Flow << detail::nums(c.model.summary->scale);
      out << YAML::EndMap;
    }
  }
  out << YAML::EndMap;
  out << YAML::Key << "schedule" << YAML::Value << YAML::BeginMap;
  if (!c.epsilons.empty()) out << YAML::Key << "epsilons" << YAML::Value << YAML::Flow << detail::nums(c.epsilons);
  if (c.pilot) {
    out << YAML::Key << "pilot" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "samples" << YAML::Value << c.pilot->samples;
    out << YAML::Key << "quantiles" << YAML::Value << YAML::Flow << detail::nums(c.pilot->quantiles);
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  out << YAML::Key << "particles" << YAML::Value << c.particles;
  std::vector<std::string> variants;
  for (auto v : c.variants) variants.emplace_back(to_string(v));
  out << YAML::Key << "variants" << YAML::Value << YAML::Flow << variants;
  out << YAML::Key << "repeats" << YAML::Value << c.repeats;
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::Key << "output" << YAML::Value << c.output;
  out << YAML::Key << "snapshots" << YAML::Value << c.snapshots;
  out << YAML::Key << "threads" << YAML::Value << c.threads;
  out << YAML::Key << "max_attempts" << YAML::Value << c.max_attempts;
  out << YAML::Key << "x_kernel" << YAML::Value << detail::to_string(c.x_kernel);
  out << YAML::Key << "new_data_per_repeat" << YAML::Value << c.new_data_per_repeat;
  if (c.density) {
    out << YAML::Key << "density" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "points" << YAML::Value << c.density->points;
    out << YAML::Key << "lower" << YAML::Value << detail::num(c.density->lower);
    out << YAML::Key << "upper" << YAML::Value << detail::num(c.density->upper);
    out << YAML::Key << "bandwidth" << YAML::Value << detail::num(c.density->bandwidth);
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

// ---------------------------------------------------------------------------
// Seeds and model construction

/// Data-generation seed for a repeat; shared by every variant of that repeat.
inline std::uint64_t data_seed(const ExperimentConfig& c, std::size_t repeat) {
  return derive_seed(c.seed, {static_cast<std::uint64_t>(StreamTag::data), c.new_data_per_repeat ? repeat : 0});
}

/// Sampler seed for (repeat, variant): independent streams for each variant.
inline std::uint64_t sampler_seed(const ExperimentConfig& c, std::size_t repeat, Variant v) {
  return derive_seed(c.seed, {static_cast<std::uint64_t>(StreamTag::variant), repeat, static_cast<std::uint64_t>(v)});
}

inline std::vector<double> default_truth(const ModelConfig& m) {
  if (m.name == "mg1_queue") return {1.0, 5.0, 0.2};
  if (m.name == "toggle_switch") return models::default_toggle_truth().to_vector();
  if (m.name == "mv_mixture") return std::vector<double>(m.dim, 0.0);
  return {0.0};
}

namespace detail {

template <typename Build>
std::vector<double> observed_or_generated(const ModelConfig& m, std::uint64_t seed, std::size_t x_dim, Build simulate_at_truth) {
  if (m.x_obs) {
    if (m.x_obs->size() != x_dim) throw ValidationError("x_obs dimension matches model", "expected " + std::to_string(x_dim) + " values");
    return *m.x_obs;
  }
  auto rng = tagged_stream(seed, StreamTag::data);
  return simulate_at_truth(m.truth ? *m.truth : default_truth(m), rng);
}

}  // namespace detail

/// Builds the named model. Observed data is taken from x_obs when given;
/// otherwise it is simulated at the truth parameters with `data_seed_value`.
/// The mixtures default to observing zeros.
inline ModelSpec build_model(const ExperimentConfig& c, std::uint64_t data_seed_value) {
  const auto& m = c.model;
  if (m.name == "normal_mixture") {
    if (!m.x_obs && !m.truth) return ModelSpec(models::NormalMixture(0.0), m.name);
    const auto obs = detail::observed_or_generated(m, data_seed_value, 1, [](const std::vector<double>& t, Rng& rng) {
      return std::vector<double>{models::normal_mixture_simulate(t.at(0), rng)};
    });
    return ModelSpec(models::NormalMixture(obs[0]), m.name);
  }
  if (m.name == "mv_mixture") {
    if (!m.x_obs && !m.truth) return ModelSpec(models::MultivariateMixture(m.dim), m.name);
    auto obs = detail::observed_or_generated(m, data_seed_value, m.dim, [&](const std::vector<double>& t, Rng& rng) {
      if (t.size() != m.dim) throw ValidationError("truth dimension matches model", "mv_mixture truth needs dim values");
      return models::mv_mixture_simulate(t, rng);
    });
    return ModelSpec(models::MultivariateMixture(std::move(obs)), m.name);
  }
  if (m.name == "mg1_queue") {
    auto obs = detail::observed_or_generated(m, data_seed_value, 5, [&](const std::vector<double>& t, Rng& rng) {
      if (t.size() != 3) throw ValidationError("truth dimension matches model", "mg1_queue truth needs 3 values");
      return models::mg1_simulate(models::QueueParams{t[0], t[1], t[2]}, m.customers, rng);
    });
    return ModelSpec(models::Mg1Queue(std::move(obs), m.customers), m.name);
  }
  if (m.name == "toggle_switch") {
    if (!m.summary) throw ValidationError("toggle summary constants resolved", "call resolve_config first");
    auto obs = detail::observed_or_generated(m, data_seed_value, models::kToggleSummaryDim, [&](const std::vector<double>& t, Rng& rng) {
      return models::toggle_summary(models::toggle_switch_simulate(models::ToggleSwitchParams::from(t), m.toggle, rng), *m.summary);
    });
    return ModelSpec(models::ToggleSwitch(std::move(obs), m.toggle, m.toggle_prior, *m.summary), m.name);
  }
  throw ValidationError("model name is known", "unknown model '" + m.name + "'");
}

/// Completes a configuration: calibrates toggle-switch summary constants and
/// turns a pilot recipe into explicit thresholds (using repeat 0's data).
/// Explicit epsilons take precedence over a pilot recipe, which is then kept
/// for provenance only. The result is idempotent under re-resolution.
inline ExperimentConfig resolve_config(ExperimentConfig c) {
  validate(c);
  if (c.model.name == "toggle_switch" && !c.model.summary) {
    c.model.summary = models::calibrate_toggle_summary(c.model.toggle, c.model.toggle_prior, c.model.calibration_samples,
                                                       derive_seed(c.seed, {static_cast<std::uint64_t>(StreamTag::calibration)}));
  }
  if (c.epsilons.empty()) {
    const auto model = build_model(c, data_seed(c, 0));
    const auto pilot = pilot_threshold(model, c.pilot->samples, c.pilot->quantiles,
                                       derive_seed(c.seed, {static_cast<std::uint64_t>(StreamTag::pilot)}), c.threads);
    c.epsilons = pilot.epsilons();
    try {
      static_cast<void>(ThresholdSchedule(c.epsilons));
    } catch (const ValidationError& e) {
      throw ValidationError("pilot schedule strictly decreasing", std::string(e.what()));
    }
  }
  c.resolved = true;
  return c;
}

inline ExperimentConfig resolve_config_text(const std::string& text) { return resolve_config(parse_config(text)); }

inline RunConfig run_config(const ExperimentConfig& c, std::size_t repeat, Variant v) {
  RunConfig rc;
  rc.n_particles = c.particles;
  rc.variant = v;
  rc.seed = sampler_seed(c, repeat, v);
  rc.max_attempts_per_particle = c.max_attempts;
  rc.threads = c.threads;
  rc.snapshots = c.snapshots;
  rc.x_kernel = c.x_kernel;
  return rc;
}

// ---------------------------------------------------------------------------
// Running

struct RunRecord {
  std::size_t repeat;
  Variant variant;
  std::uint64_t sampler_seed;
  std::uint64_t data_seed;
  std::vector<double> x_obs;
  double seconds = 0.0;
  bool ok = false;
  std::string error;
};

struct Outcome {
  int exit_code = 0;
  std::vector<std::filesystem::path> files;
  std::vector<RunRecord> runs;
  std::optional<EfficiencyTable> table;
};

inline std::string trace_file_name(Variant v, std::size_t repeat) {
  return "trace_" + std::string(to_string(v)) + "_r" + std::to_string(repeat) + ".csv";
}

inline std::string population_file_name(Variant v, std::size_t repeat, std::optional<int> step = std::nullopt) {
  auto name = "population_" + std::string(to_string(v)) + "_r" + std::to_string(repeat);
  if (step) name += "_t" + std::to_string(*step);
  return name + ".csv";
}

namespace detail {

template <typename Write>
std::filesystem::path write_file(const std::filesystem::path& path, Write write) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write(out);
  if (!out) throw Error("failed while writing '" + path.string() + "'");
  return path;
}

inline void write_manifest(const std::filesystem::path& path, const ExperimentConfig& c, const std::vector<RunRecord>& runs, double seconds) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "software" << YAML::Value << "abcsmc";
  out << YAML::Key << "version" << YAML::Value << kVersion;
  out << YAML::Key << "config" << YAML::Value << YAML::Load(to_yaml(c));
  out << YAML::Key << "runs" << YAML::Value << YAML::BeginSeq;
  for (const auto& r : runs) {
    out << YAML::BeginMap;
    out << YAML::Key << "repeat" << YAML::Value << r.repeat;
    out << YAML::Key << "variant" << YAML::Value << std::string(to_string(r.variant));
    out << YAML::Key << "sampler_seed" << YAML::Value << r.sampler_seed;
    out << YAML::Key << "data_seed" << YAML::Value << r.data_seed;
    out << YAML::Key << "x_obs" << YAML::Value << YAML::Flow << detail::nums(r.x_obs);
    out << YAML::Key << "seconds" << YAML::Value << detail::num(r.seconds);
    out << YAML::Key << "status" << YAML::Value << (r.ok ? "ok" : "failed");
    if (!r.ok) out << YAML::Key << "error" << YAML::Value << r.error;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "seconds" << YAML::Value << detail::num(seconds);
  out << YAML::EndMap;
  write_file(path, [&](std::ostream& os) { os << out.c_str() << '\n'; });
}

inline std::vector<double> grid_points(const DensityGrid& g) {
  std::vector<double> out(g.points);
  for (std::size_t i = 0; i < g.points; ++i) out[i] = g.lower + (g.upper - g.lower) * static_cast<double>(i) / static_cast<double>(g.points - 1);
  return out;
}

}  // namespace detail

/// Runs every (repeat, variant) pair of a resolved configuration and writes
/// traces, final populations, optional snapshots and density grids, the
/// efficiency table and a manifest into c.output. Failed runs are recorded;
/// a FAILED marker with the error report is written and exit_code is 3.
inline Outcome run_experiment(const ExperimentConfig& config, std::optional<std::size_t> only_repeat = std::nullopt) {
  const auto c = config.resolved ? config : resolve_config(config);
  namespace fs = std::filesystem;
  const fs::path dir(c.output);
  fs::create_directories(dir);
  fs::remove(dir / "FAILED");
  const auto start = std::chrono::steady_clock::now();

  Outcome outcome;
  std::vector<VariantTraces> traces;
  for (auto v : c.variants) traces.push_back({std::string(to_string(v)), {}});
  const ThresholdSchedule schedule(c.epsilons);

  const std::size_t first = only_repeat.value_or(0);
  const std::size_t last = only_repeat ? first + 1 : c.repeats;
  for (std::size_t r = first; r < last; ++r) {
    const auto dseed = data_seed(c, r);
    std::optional<ModelSpec> model;
    std::string model_error;
    try {
      model = build_model(c, dseed);
    } catch (const std::exception& e) {
      model_error = e.what();
    }
    std::vector<std::vector<StepRecord>> repeat_steps;
    for (auto v : c.variants) {
      RunRecord record{r, v, sampler_seed(c, r, v), dseed, {}, 0.0, false, model_error};
      if (model) {
        record.x_obs.assign(model->observed().begin(), model->observed().end());
        const auto t0 = std::chrono::steady_clock::now();
        try {
          const auto trace = run(*model, schedule, run_config(c, r, v));
          outcome.files.push_back(detail::write_file(dir / trace_file_name(v, r), [&](std::ostream& os) { io::write_trace_csv(os, trace.steps); }));
          outcome.files.push_back(detail::write_file(dir / population_file_name(v, r),
                                                     [&](std::ostream& os) { io::write_population_csv(os, trace.final_population); }));
          for (const auto& snap : trace.snapshots) {
            outcome.files.push_back(detail::write_file(dir / population_file_name(v, r, snap.step()),
                                                       [&](std::ostream& os) { io::write_population_csv(os, snap); }));
          }
          if (c.density) {
            const auto grid = detail::grid_points(*c.density);
            for (std::size_t k = 0; k < trace.final_population.theta_dim(); ++k) {
              double h = c.density->bandwidth;
              if (!(h > 0.0)) {
                const auto column = trace.final_population.theta_column(k);
                h = std::max(weighted_std(column, trace.final_population.weights()), 1e-12) *
                    std::pow(static_cast<double>(trace.final_population.size()), -0.2);
              }
              const auto density = kde_grid(trace.final_population, k, grid, h);
              const auto name = "density_" + std::string(to_string(v)) + "_r" + std::to_string(r) + "_theta" + std::to_string(k + 1) + ".csv";
              outcome.files.push_back(detail::write_file(dir / name, [&](std::ostream& os) { io::write_density_csv(os, grid, density); }));
            }
          }
          repeat_steps.push_back(trace.steps);
          record.ok = true;
          record.error.clear();
        } catch (const std::exception& e) {
          record.error = e.what();
        }
        record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      }
      outcome.runs.push_back(std::move(record));
    }
    if (repeat_steps.size() == c.variants.size()) {
      for (std::size_t v = 0; v < c.variants.size(); ++v) traces[v].repeats.push_back(std::move(repeat_steps[v]));
    }
  }

  if (!traces.front().repeats.empty()) {
    try {
      outcome.table = efficiency_table(traces);
      outcome.files.push_back(detail::write_file(dir / "efficiency.csv", [&](std::ostream& os) { io::write_efficiency_csv(os, *outcome.table); }));
    } catch (const Error& e) {
      outcome.runs.push_back(RunRecord{0, c.variants.front(), 0, 0, {}, 0.0, false, std::string("efficiency table: ") + e.what()});
    }
  }

  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  detail::write_manifest(dir / "manifest.yaml", c, outcome.runs, seconds);
  outcome.files.push_back(dir / "manifest.yaml");

  std::vector<const RunRecord*> failed;
  for (const auto& r : outcome.runs) {
    if (!r.ok) failed.push_back(&r);
  }
  if (!failed.empty()) {
    outcome.exit_code = 3;
    detail::write_file(dir / "FAILED", [&](std::ostream& os) {
      YAML::Emitter out;
      out << YAML::BeginSeq;
      for (const auto* r : failed) {
        out << YAML::BeginMap << YAML::Key << "repeat" << YAML::Value << r->repeat << YAML::Key << "variant" << YAML::Value
            << std::string(to_string(r->variant)) << YAML::Key << "error" << YAML::Value << r->error << YAML::EndMap;
      }
      out << YAML::EndSeq;
      os << out.c_str() << '\n';
    });
  }
  return outcome;
}

/// Recovers the resolved configuration recorded in a manifest.yaml.
inline ExperimentConfig config_from_manifest(const std::filesystem::path& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw ParseError(e.msg, e.mark.is_null() ? -1 : e.mark.line + 1, "");
  }
  if (!root["config"]) throw ParseError("manifest has no config section", -1, "config");
  YAML::Emitter out;
  out << root["config"];
  return parse_config(out.c_str());
}

/// Reads trace_<variant>_r<k>.csv files from a directory and aggregates them.
/// Repeats are matched by index; only repeats present for every variant count.
inline EfficiencyTable summarize_directory(const std::filesystem::path& dir) {
  std::map<std::string, std::map<std::size_t, std::vector<StepRecord>>> found;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (!name.starts_with("trace_") || !name.ends_with(".csv")) continue;
    const auto stem = name.substr(6, name.size() - 10);
    const auto split = stem.rfind("_r");
    if (split == std::string::npos) continue;
    const auto variant = stem.substr(0, split);
    std::size_t repeat = 0;
    try {
      repeat = std::stoul(stem.substr(split + 2));
    } catch (const std::exception&) {
      continue;
    }
    std::ifstream in(entry.path());
    found[variant][repeat] = io::read_trace_csv(in);
  }
  if (found.empty()) throw SchemaMismatch("no trace files in '" + dir.string() + "'");
  std::vector<VariantTraces> traces;
  const std::vector<std::string> order{"smc", "smc_aw"};
  for (const auto& name : order) {
    if (found.contains(name)) traces.push_back({name, {}});
  }
  for (const auto& [name, repeats] : found) {
    if (std::find(order.begin(), order.end(), name) == order.end()) traces.push_back({name, {}});
  }
  for (const auto& [repeat, steps] : found.at(traces.front().name)) {
    const bool complete = std::all_of(traces.begin(), traces.end(), [&](const VariantTraces& t) { return found.at(t.name).contains(repeat); });
    if (!complete) continue;
    for (auto& t : traces) t.repeats.push_back(found.at(t.name).at(repeat));
  }
  return efficiency_table(traces);
}

}  // namespace abcsmc::experiment
