// abcsmc: command line front end for pilot studies, runs and repeated studies.

#include <abcsmc/experiment.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  bool snapshots = false;
};

void add_common(CLI::App* cmd, Options& o, bool needs_config = true) {
  auto* c = cmd->add_option("--config", o.config, "experiment configuration (YAML)");
  if (needs_config) c->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "override the master seed");
  cmd->add_option("--out", o.out, "override the output directory");
  cmd->add_option("--threads", o.threads, "worker threads per run")->check(CLI::PositiveNumber);
  cmd->add_flag("--snapshots", o.snapshots, "also write intermediate populations");
}

abcsmc::experiment::ExperimentConfig load(const Options& o) {
  auto c = abcsmc::experiment::load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.output = *o.out;
  if (o.threads) c.threads = *o.threads;
  if (o.snapshots) c.snapshots = true;
  return c;
}

int pilot(const Options& o) {
  namespace ex = abcsmc::experiment;
  auto c = load(o);
  if (!c.pilot) throw abcsmc::ValidationError("pilot recipe given", "config has no schedule.pilot section");
  c.epsilons.clear();
  const auto resolved = ex::resolve_config(c);
  std::cout << "level,epsilon\n";
  for (std::size_t i = 0; i < resolved.epsilons.size(); ++i) {
    std::cout << abcsmc::io::format_double(c.pilot->quantiles[i]) << ',' << abcsmc::io::format_double(resolved.epsilons[i]) << '\n';
  }
  return 0;
}

int execute(const Options& o, bool study) {
  namespace ex = abcsmc::experiment;
  auto c = ex::resolve_config(load(o));
  if (!study) c.repeats = 1;
  const auto outcome = ex::run_experiment(c);
  for (const auto& r : outcome.runs) {
    std::cerr << "repeat " << r.repeat << ' ' << abcsmc::to_string(r.variant) << ": " << (r.ok ? "ok" : "FAILED: " + r.error) << " ("
              << r.seconds << " s)\n";
  }
  if (outcome.table) {
    const auto& t = *outcome.table;
    for (std::size_t v = 0; v < t.variants.size(); ++v) {
      std::cout << t.variants[v] << " total simulations per accepted particle: " << abcsmc::io::format_double(t.total_mean[v]) << '\n';
    }
  }
  std::cout << "outputs in " << c.output << '\n';
  return outcome.exit_code;
}

int summarize(const Options& o, const std::string& dir) {
  const auto table = abcsmc::experiment::summarize_directory(dir);
  const auto target = std::filesystem::path(o.out.value_or(dir)) / "efficiency.csv";
  std::filesystem::create_directories(target.parent_path());
  std::ofstream out(target);
  abcsmc::io::write_efficiency_csv(out, table);
  abcsmc::io::write_efficiency_csv(std::cout, table);
  return out ? 0 : kRuntimeError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ABC sequential Monte Carlo with adaptive weights"};
  app.require_subcommand(1);
  app.set_version_flag("--version", abcsmc::experiment::kVersion);

  Options o;
  std::string dir;
  auto* pilot_cmd = app.add_subcommand("pilot", "run the pilot study and print the threshold quantiles");
  add_common(pilot_cmd, o);
  auto* run_cmd = app.add_subcommand("run", "run every variant once (repeat 0)");
  add_common(run_cmd, o);
  auto* study_cmd = app.add_subcommand("study", "run repeats x variants and aggregate");
  add_common(study_cmd, o);
  auto* summarize_cmd = app.add_subcommand("summarize", "aggregate trace files into an efficiency table");
  summarize_cmd->add_option("dir", dir, "directory holding trace_<variant>_r<k>.csv files")->required()->check(CLI::ExistingDirectory);
  summarize_cmd->add_option("--out", o.out, "directory for efficiency.csv (default: dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*pilot_cmd) return pilot(o);
    if (*run_cmd) return execute(o, false);
    if (*study_cmd) return execute(o, true);
    if (*summarize_cmd) return summarize(o, dir);
  } catch (const abcsmc::ParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const abcsmc::ValidationError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
