// lab: run named experiments and manage the program-enumeration cache.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "unipred/lab/experiments.hpp"

namespace {

using namespace unipred;
using Overrides = std::vector<std::pair<std::string, std::string>>;

int run(const std::string& experiment, const std::string& config_path, const Overrides& overrides) {
  Overrides ov{{"experiment", experiment}};
  ov.insert(ov.end(), overrides.begin(), overrides.end());
  const auto cfg = config_path.empty() ? lab::make_config({}, ov) : lab::load_config(config_path, ov);
  const auto result = lab::run_experiment(cfg);
  if (cfg.out.empty()) {
    std::cout << lab::to_csv(result.table);
  } else {
    lab::emit_csv(result.table, cfg.out);
  }
  for (const auto& f : result.failures) std::cerr << "bound failed: " << f << "\n";
  return result.bounds_hold ? 0 : 1;
}

int cache(const std::string& action, unsigned L, std::uint64_t T) {
  solomonoff::EnumerationBudget b;
  b.max_length = L;
  b.max_steps = T;
  b.validate();
  const auto path = solomonoff::cache_path(b);
  if (action == "build") {
    const auto h = solomonoff::build_cache(path, b);
    std::cout << "built " << path.string() << " records=" << h.record_count << "\n";
    return 0;
  }
  if (action == "verify") {
    try {
      const auto v = solomonoff::verify_cache(path);
      std::cout << "records=" << v.records << " prefix_free=" << v.prefix_free
                << " canonical_order=" << v.canonical_order << " kraft_total=" << lab::format_double(v.kraft_total)
                << " kraft_committed=" << lab::format_double(v.kraft_committed) << "\n";
      std::cout << (v.ok() ? "ok" : "FAILED") << "\n";
      return v.ok() ? 0 : 1;
    } catch (const CacheCorrupt& e) {
      std::cerr << "corrupt: " << e.what() << "\n";
      return 1;
    }
  }
  const auto h = solomonoff::cache_info(path);
  std::cout << "path=" << path.string() << "\nisa_version=" << h.isa_version << "\nL=" << h.budget.max_length
            << "\nT=" << h.budget.max_steps << "\noutput_cap=" << h.budget.output_cap
            << "\npartitions=" << h.partitions_done << "/" << h.partitions_total << "\nrecords=" << h.record_count
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequence prediction experiments"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "Run a named experiment and emit CSV");
  std::string experiment, config_path;
  std::optional<std::uint64_t> seed, n, traj, T;
  std::optional<unsigned> L;
  std::optional<double> theta;
  std::optional<std::string> prior, loss, out;
  std::vector<std::string> names;
  for (const auto& [k, v] : lab::experiment_catalog()) names.push_back(k);
  run_cmd->add_option("experiment", experiment, "Experiment name")->required()->check(CLI::IsMember(names));
  run_cmd->add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", seed, "Master seed");
  run_cmd->add_option("--n", n, "Horizon or range");
  run_cmd->add_option("--traj", traj, "Monte Carlo trajectories");
  run_cmd->add_option("--L", L, "Program length budget");
  run_cmd->add_option("--T", T, "Step budget");
  run_cmd->add_option("--prior", prior, "Prior or model class");
  run_cmd->add_option("--loss", loss, "Loss matrix: zero-one, asymmetric, abstain");
  run_cmd->add_option("--theta", theta, "True parameter");
  run_cmd->add_option("--out", out, "Output CSV path (stdout if absent)");

  auto* cache_cmd = app.add_subcommand("cache", "Manage the program enumeration cache");
  std::string action;
  unsigned cL = 20;
  std::uint64_t cT = 10000;
  cache_cmd->add_option("action", action, "build, verify or info")->required()->check(CLI::IsMember({"build", "verify", "info"}));
  cache_cmd->add_option("--L", cL, "Program length budget");
  cache_cmd->add_option("--T", cT, "Step budget");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      Overrides ov;
      auto put = [&](const char* key, const auto& v) {
        if (v) ov.emplace_back(key, lab::ExperimentConfig::to_text(*v));
      };
      put("seed", seed);
      put("n", n);
      put("traj", traj);
      if (L) ov.emplace_back("L", std::to_string(*L));
      put("T", T);
      put("theta", theta);
      if (prior) ov.emplace_back("prior", *prior);
      if (loss) ov.emplace_back("loss", *loss);
      if (out) ov.emplace_back("out", *out);
      return run(experiment, config_path, ov);
    }
    return cache(action, cL, cT);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
