#pragma once

// Experiment configuration: a flat key=value file plus overrides.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "unipred/errors.hpp"

namespace unipred::lab {

struct ExperimentConfig {
  std::string experiment;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> n;             // horizon; per-experiment default
  std::uint64_t trajectories = 10000;
  unsigned L = 20;
  std::uint64_t T = 10000;
  std::string prior = "default";
  std::string loss = "zero-one";
  std::optional<double> theta;                // true parameter where relevant
  unsigned workers = 0;
  std::string out;

  /// Canonical key=value lines, in a fixed order; echoed into result tables.
  std::vector<std::pair<std::string, std::string>> echo() const {
    auto opt = [](const auto& v) { return v ? to_text(*v) : std::string("unset"); };
    return {{"experiment", experiment},
            {"seed", opt(seed)},
            {"n", opt(n)},
            {"traj", std::to_string(trajectories)},
            {"L", std::to_string(L)},
            {"T", std::to_string(T)},
            {"prior", prior},
            {"loss", loss},
            {"theta", opt(theta)}};
  }

  static std::string to_text(std::uint64_t v) { return std::to_string(v); }
  static std::string to_text(double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
  }
};

namespace detail {

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty())
    throw ConfigInvalid("bad value for " + key + ": '" + v + "'");
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Sets one key; unknown keys and malformed values throw ConfigInvalid.
inline void apply(ExperimentConfig& c, const std::string& key, const std::string& value) {
  using detail::parse_number;
  if (key == "experiment") c.experiment = value;
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "n") c.n = parse_number<std::uint64_t>(key, value);
  else if (key == "traj") c.trajectories = parse_number<std::uint64_t>(key, value);
  else if (key == "L") c.L = parse_number<unsigned>(key, value);
  else if (key == "T") c.T = parse_number<std::uint64_t>(key, value);
  else if (key == "prior") c.prior = value;
  else if (key == "loss") c.loss = value;
  else if (key == "theta") {
    const double t = parse_number<double>(key, value);
    if (!(t > 0.0 && t < 1.0)) throw ConfigInvalid("theta must lie in (0,1)");
    c.theta = t;
  } else if (key == "workers") c.workers = parse_number<unsigned>(key, value);
  else if (key == "out") c.out = value;
  else throw ConfigInvalid("unknown key '" + key + "'");
}

/// Lines of the form key=value; blank lines and '#' comments are skipped.
inline std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigInvalid("line " + std::to_string(lineno) + ": expected key=value");
    kv.emplace_back(detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
  }
  return kv;
}

/// File entries first, then overrides; later assignments win.
inline ExperimentConfig make_config(const std::vector<std::pair<std::string, std::string>>& file_entries,
                                    const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  ExperimentConfig c;
  for (const auto& [k, v] : file_entries) apply(c, k, v);
  for (const auto& [k, v] : overrides) apply(c, k, v);
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path,
                                    const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return make_config(parse_config_text(ss.str()), overrides);
}

}  // namespace unipred::lab
