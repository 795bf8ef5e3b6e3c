#pragma once

#include <abcsmc/diagnostics.hpp>
#include <abcsmc/engine.hpp>
#include <abcsmc/errors.hpp>
#include <abcsmc/particle.hpp>

#include <charconv>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace abcsmc::io {

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline double parse_double(std::string_view text) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    if (text == "inf") return std::numeric_limits<double>::infinity();
    throw SchemaMismatch("not a number: '" + std::string(text) + "'");
  }
  return v;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

namespace detail {

inline std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

inline std::size_t count_prefixed(std::span<const std::string_view> header, std::string_view prefix) {
  std::size_t n = 0;
  for (auto h : header) {
    if (h.substr(0, prefix.size()) == prefix) ++n;
  }
  return n;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Populations: step, particle_id, weight, theta_1..theta_p, x_1..x_q

inline void write_population_csv(std::ostream& out, const ParticleSystem& system) {
  out << "step,particle_id,weight";
  for (std::size_t k = 1; k <= system.theta_dim(); ++k) out << ",theta_" << k;
  for (std::size_t k = 1; k <= system.x_dim(); ++k) out << ",x_" << k;
  out << '\n';
  for (std::size_t i = 0; i < system.size(); ++i) {
    out << system.step() << ',' << i << ',' << format_double(system.weights()[i]);
    for (double v : system[i].theta) out << ',' << format_double(v);
    for (double v : system[i].x) out << ',' << format_double(v);
    out << '\n';
  }
}

inline ParticleSystem read_population_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaMismatch("population file is empty");
  line = detail::strip_cr(line);
  const auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "step" || header[1] != "particle_id" || header[2] != "weight") {
    throw SchemaMismatch("population header must start with step,particle_id,weight");
  }
  const auto p = detail::count_prefixed(header, "theta_");
  const auto q = detail::count_prefixed(header, "x_");
  if (3 + p + q != header.size()) throw SchemaMismatch("unexpected population columns");
  std::vector<Particle> particles;
  std::vector<double> weights;
  int step = 0;
  while (std::getline(in, line)) {
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) throw SchemaMismatch("population row has the wrong number of columns");
    step = static_cast<int>(parse_double(cells[0]));
    if (static_cast<std::size_t>(parse_double(cells[1])) != particles.size()) throw SchemaMismatch("population rows out of order");
    weights.push_back(parse_double(cells[2]));
    Particle particle;
    for (std::size_t k = 0; k < p; ++k) particle.theta.push_back(parse_double(cells[3 + k]));
    for (std::size_t k = 0; k < q; ++k) particle.x.push_back(parse_double(cells[3 + p + k]));
    particles.push_back(std::move(particle));
  }
  return ParticleSystem(std::move(particles), std::move(weights), step);
}

// ---------------------------------------------------------------------------
// Run traces: step, epsilon, n_accepted, n_simulations, n_prior_rejects,
// cov_weights, seconds, then h_theta_k and h_x_k bandwidth columns (blank
// where a step used no such kernel).

inline void write_trace_csv(std::ostream& out, std::span<const StepRecord> steps) {
  std::size_t p = 0;
  std::size_t q = 0;
  for (const auto& s : steps) {
    p = std::max(p, s.theta_bandwidths.size());
    q = std::max(q, s.x_bandwidths.size());
  }
  out << "step,epsilon,n_accepted,n_simulations,n_prior_rejects,cov_weights,seconds";
  for (std::size_t k = 1; k <= p; ++k) out << ",h_theta_" << k;
  for (std::size_t k = 1; k <= q; ++k) out << ",h_x_" << k;
  out << '\n';
  for (const auto& s : steps) {
    out << s.step << ',' << format_double(s.epsilon) << ',' << s.n_accepted << ',' << s.n_simulations << ',' << s.n_prior_rejects << ','
        << format_double(s.cov_weights) << ',' << format_double(s.seconds);
    for (std::size_t k = 0; k < p; ++k) out << ',' << (k < s.theta_bandwidths.size() ? format_double(s.theta_bandwidths[k]) : "");
    for (std::size_t k = 0; k < q; ++k) out << ',' << (k < s.x_bandwidths.size() ? format_double(s.x_bandwidths[k]) : "");
    out << '\n';
  }
}

inline std::vector<StepRecord> read_trace_csv(std::istream& in) {
  static constexpr std::string_view kColumns[] = {"step", "epsilon", "n_accepted", "n_simulations", "n_prior_rejects", "cov_weights", "seconds"};
  std::string line;
  if (!std::getline(in, line)) throw SchemaMismatch("trace file is empty");
  line = detail::strip_cr(line);
  const auto header = split_csv(line);
  if (header.size() < std::size(kColumns)) throw SchemaMismatch("trace header is too short");
  for (std::size_t c = 0; c < std::size(kColumns); ++c) {
    if (header[c] != kColumns[c]) throw SchemaMismatch("trace column " + std::to_string(c + 1) + " should be " + std::string(kColumns[c]));
  }
  const auto p = detail::count_prefixed(header, "h_theta_");
  const auto q = detail::count_prefixed(header, "h_x_");
  if (std::size(kColumns) + p + q != header.size()) throw SchemaMismatch("unexpected trace columns");
  std::vector<StepRecord> steps;
  while (std::getline(in, line)) {
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) throw SchemaMismatch("trace row has the wrong number of columns");
    StepRecord s;
    s.step = static_cast<int>(parse_double(cells[0]));
    s.epsilon = parse_double(cells[1]);
    s.n_accepted = static_cast<std::size_t>(parse_double(cells[2]));
    s.n_simulations = static_cast<std::uint64_t>(parse_double(cells[3]));
    s.n_prior_rejects = static_cast<std::uint64_t>(parse_double(cells[4]));
    s.cov_weights = parse_double(cells[5]);
    s.seconds = parse_double(cells[6]);
    for (std::size_t k = 0; k < p; ++k) {
      if (!cells[7 + k].empty()) s.theta_bandwidths.push_back(parse_double(cells[7 + k]));
    }
    for (std::size_t k = 0; k < q; ++k) {
      if (!cells[7 + p + k].empty()) s.x_bandwidths.push_back(parse_double(cells[7 + p + k]));
    }
    steps.push_back(std::move(s));
  }
  return steps;
}

// ---------------------------------------------------------------------------
// Efficiency tables: t, epsilon, <variant>_min, <variant>_mean, <variant>_max ...
// followed by a "total" row holding only the mean columns.

inline void write_efficiency_csv(std::ostream& out, const EfficiencyTable& table) {
  out << "t,epsilon";
  for (const auto& v : table.variants) out << ',' << v << "_min," << v << "_mean," << v << "_max";
  out << '\n';
  for (const auto& row : table.rows) {
    out << row.step << ',' << format_double(row.epsilon);
    for (const auto& s : row.per_variant) out << ',' << format_double(s.min) << ',' << format_double(s.mean) << ',' << format_double(s.max);
    out << '\n';
  }
  out << "total,";
  for (double total : table.total_mean) out << ",," << format_double(total) << ',';
  out << '\n';
}

inline void write_density_csv(std::ostream& out, std::span<const double> grid, std::span<const double> density) {
  if (grid.size() != density.size()) throw LengthMismatch("grid and density differ in length");
  out << "grid_value,density\n";
  for (std::size_t g = 0; g < grid.size(); ++g) out << format_double(grid[g]) << ',' << format_double(density[g]) << '\n';
}

}  // namespace abcsmc::io
