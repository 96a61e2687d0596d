#pragma once

// Named experiments. Each returns a result table and a verdict: the verdict
// is false when any asserted inequality or identity failed.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "unipred/bounds.hpp"
#include "unipred/catalog.hpp"
#include "unipred/conjugate.hpp"
#include "unipred/decisions.hpp"
#include "unipred/lab/config.hpp"
#include "unipred/lab/table.hpp"
#include "unipred/solomonoff/cache.hpp"
#include "unipred/solomonoff/estimates.hpp"

namespace unipred::lab {

inline constexpr const char* kLibraryVersion = "1.0.0";

struct ExperimentResult {
  ResultTable table;
  bool bounds_hold = true;
  std::vector<std::string> failures;

  /// Records a named verdict in the metadata.
  void verdict(const std::string& name, bool ok) {
    table.meta("verdict." + name, ok ? "pass" : "fail");
    if (!ok) {
      bounds_hold = false;
      failures.push_back(name);
    }
  }
};

namespace detail {

inline std::string num(double v) { return format_double(v); }

inline bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(std::abs(b), std::numeric_limits<double>::min());
}

inline Cell int_cell(std::uint64_t v) { return static_cast<std::int64_t>(v); }

inline LossMatrix loss_by_name(const std::string& name) {
  if (name == "zero-one") return LossMatrix::zero_one();
  if (name == "asymmetric") return LossMatrix::asymmetric();
  if (name == "abstain") return LossMatrix::abstain();
  throw ConfigInvalid("unknown loss '" + name + "'");
}

inline void require_seed(const ExperimentConfig& c) {
  if (!c.seed) throw ConfigInvalid("experiment '" + c.experiment + "' is stochastic and needs a seed");
}

// Geometric checkpoints below `n`, plus `n` itself.
inline std::vector<std::uint64_t> checkpoints(std::uint64_t n) {
  std::set<std::uint64_t> s{n};
  for (std::uint64_t v : {0, 1, 2, 3, 4, 5})
    if (v < n) s.insert(v);
  for (std::uint64_t v = 10; v < n; v *= 10) s.insert(v);
  return {s.begin(), s.end()};
}

// ---------------------------------------------------------------------------

inline void sunrise(const ExperimentConfig& c, ExperimentResult& out) {
  const std::uint64_t N = c.n.value_or(1826213);
  auto& t = out.table;
  t.columns = {"n", "next_one", "doom", "log_evidence", "evidence_ratio"};
  const auto uniform = DirichletPrior::uniform();
  bool exact = true, chain = true;
  for (auto n : checkpoints(N)) {
    const auto cv = CountVector::binary(0, n);
    const double one = laplace_predictive(cv);
    const double doom = dirichlet_predictive(cv, uniform, 0);
    const double lev = laplace_evidence(cv).log();
    const double ratio = (laplace_evidence(CountVector::binary(0, n + 1)) / laplace_evidence(cv)).prob();
    const double nn = static_cast<double>(n);
    exact = exact && rel_close(one, (nn + 1) / (nn + 2), 1e-12) && rel_close(doom, 1.0 / (nn + 2), 1e-12);
    chain = chain && rel_close(ratio, one, 1e-6);
    t.add_row({int_cell(n), one, doom, lev, ratio});
  }
  out.verdict("closed_form", exact);
  out.verdict("evidence_chain", chain);
}

inline void raven_confirmation(const ExperimentConfig& c, ExperimentResult& out) {
  const std::uint64_t N = c.n.value_or(100);
  const double eps = 0.05;
  auto& t = out.table;
  t.meta("epsilon", num(eps));
  t.columns = {"n",           "uniform_H2",      "dirac_H2",       "dirac_point",   "uniform_H_eps",
               "uniform_H1_k10", "dirac_H1_k10", "uniform_next_zero", "dirac_next_zero"};
  const DiracMixedModel dirac;
  bool uniform_zero = true, dirac_exact = true, next_zero = true;
  for (std::uint64_t n = 0; n <= N; ++n) {
    const auto cv = CountVector::binary(0, n);
    const double h2u = universal_seq_posterior_uniform(n, kUnbounded);
    const double h2d = dirac_confirmation(n, kUnbounded);
    const double nz = dirac.predictive_of_counts(cv, 0).prob();
    const double nn = static_cast<double>(n);
    uniform_zero = uniform_zero && h2u == 0.0;
    dirac_exact = dirac_exact && rel_close(h2d, (nn + 1) / (nn + 2), 1e-12);
    next_zero = next_zero && rel_close(nz, 1.0 / ((nn + 2) * (nn + 2)), 1e-9);
    t.add_row({int_cell(n), h2u, h2d, dirac_point_posterior(n), relaxed_hypothesis_posterior(n, eps),
               universal_seq_posterior_uniform(n, 10), dirac_confirmation(n, 10),
               dirichlet_predictive(cv, DirichletPrior::uniform(), 0), nz});
  }
  out.verdict("uniform_H2_zero", uniform_zero);
  out.verdict("dirac_H2_closed_form", dirac_exact);
  out.verdict("dirac_next_zero", next_zero);
}

inline void finite_population(const ExperimentConfig& c, ExperimentResult& out) {
  const std::uint64_t Nmax = c.n.value_or(10000);
  if (Nmax == 0) throw ConfigInvalid("population size must be positive");
  auto& t = out.table;
  t.columns = {"N", "n", "posterior", "chain_product"};
  bool ok = true;
  for (auto N : checkpoints(Nmax)) {
    if (N == 0) continue;
    std::set<std::uint64_t> ns{0, 1, N / 4, N / 2, N - 1, N};
    for (auto n : ns) {
      const double post = finite_population_posterior(n, N);
      // Laplace predictive chain over the unseen members.
      double chain = 1.0;
      for (std::uint64_t m = n; m < N; ++m) chain *= laplace_predictive(CountVector::binary(0, m));
      ok = ok && post == static_cast<double>(n + 1) / static_cast<double>(N + 1) && rel_close(chain, post, 1e-10);
      t.add_row({int_cell(N), int_cell(n), post, chain});
    }
  }
  out.verdict("closed_form", ok);
}

inline void regrouping(const ExperimentConfig&, ExperimentResult& out) {
  auto& t = out.table;
  t.columns = {"kind", "x", "fine", "regrouped", "reference", "naive"};
  const auto fine = DirichletPrior::uniform(3);
  const std::vector<std::size_t> f{0, 1, 1};
  const auto coarse = regroup_prior(fine, f);
  t.meta("grouping", "{0}->0,{1,2}->1");
  bool ok = true;
  for (int i = 1; i < 20; ++i) {
    const double th = i / 20.0;
    const double a = dirichlet_marginal_density(fine, 0, th);
    const double b = dirichlet_marginal_density(coarse, 0, th);
    const double ref = 2.0 * (1.0 - th);
    ok = ok && rel_close(a, ref, 1e-12) && rel_close(b, ref, 1e-12);
    t.add_row({std::string("density"), th, a, b, ref, 1.0});
  }
  const std::vector<std::vector<std::uint64_t>> data{{0, 0, 0}, {1, 1, 1}, {3, 1, 4}, {10, 2, 5}, {0, 7, 0}, {25, 0, 0}};
  for (const auto& d : data) {
    CountVector cv(d.size());
    cv.counts = d;
    const double a = dirichlet_predictive(cv, fine, 0);
    const double b = dirichlet_predictive(regroup_counts(cv, f), coarse, 0);
    const double n = static_cast<double>(cv.total());
    const double ref = (static_cast<double>(d[0]) + 1.0) / (n + 3.0);
    const double naive = (static_cast<double>(d[0]) + 1.0) / (n + 2.0);
    ok = ok && rel_close(a, ref, 1e-12) && rel_close(b, ref, 1e-12);
    t.add_row({std::string("predictive"), n, a, b, ref, naive});
  }
  out.verdict("regroup_invariance", ok);
}

inline void bound_suite(const ExperimentConfig& c, ExperimentResult& out) {
  require_seed(c);
  const std::size_t n = c.n.value_or(10);
  if (n == 0) throw ConfigInvalid("n must be positive");
  const std::string prior = c.prior == "default" ? "two-point" : c.prior;
  catalog::BernoulliSetup s;
  try {
    s = catalog::bernoulli_setup(prior, c.theta);
  } catch (const DomainError& e) {
    throw ConfigInvalid(e.what());
  }
  const auto loss = loss_by_name(c.loss);
  PathPlan plan;
  plan.trajectories = c.trajectories;
  plan.seed = *c.seed;
  plan.workers = c.workers;
  const auto r = evaluate_paths(*s.mu, {s.xi.get()}, n, plan, &loss, true);

  auto& t = out.table;
  const double lw = -std::log(s.w_mu) + 0.0;
  t.meta("method", std::string(to_string(r.method)));
  t.meta("theta", num(s.theta));
  t.meta("w_mu", num(s.w_mu));
  t.columns = {"t",
               "ratio_cum",
               "hellinger_cum",
               "divergence_cum",
               "log_inv_w",
               "loss_mu_cum",
               "loss_xi_cum",
               "gap_cum",
               "slack_ratio_hellinger",
               "slack_hellinger_divergence",
               "slack_divergence_bound",
               "slack_loss_gap",
               "slack_gap_hellinger",
               "slack_corollary"};
  const std::size_t lx = PathResult::loss_slot(0), gx = PathResult::gap_slot(0);
  double R = 0, H = 0, D = 0, Lm = 0, Lx = 0, G = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    R += r.step_mean[kRatio][k - 1];
    H += r.step_mean[kHellinger][k - 1];
    D += r.step_mean[kKL][k - 1];
    Lm += r.step_mean[kLossMu][k - 1];
    Lx += r.step_mean[lx][k - 1];
    G += r.step_mean[gx][k - 1];
    const double ex = std::sqrt(Lx) - std::sqrt(Lm);
    t.add_row({int_cell(k), R, H, D, lw, Lm, Lx, G, H - R + 0.0, D - H + 0.0, lw - D + 0.0, G - ex * ex + 0.0,
               2.0 * H - G + 0.0, std::sqrt(2.0 * lw) - ex + 0.0});
  }

  // Verdicts on the totals; Monte Carlo links are judged at three standard errors.
  const auto d1 = r.difference(kRatio, kHellinger);
  const auto d2 = r.difference(kHellinger, kKL);
  const auto dl = r.difference(lx, kLossMu);
  const auto dg = r.combination({{gx, 1.0}, {kHellinger, -2.0}});
  const double ex = std::sqrt(Lx) - std::sqrt(Lm);
  out.verdict("ratio_le_hellinger", Link{R, H, d1.se}.holds());
  out.verdict("hellinger_le_divergence", Link{H, D, d2.se}.holds());
  out.verdict("divergence_le_bound", Link{D, lw, r.total(kKL).se}.holds());
  out.verdict("loss_first", Link{ex * ex, G, dl.se}.holds());
  out.verdict("loss_second", Link{G, 2.0 * H, dg.se}.holds());
  out.verdict("loss_corollary", Link{ex, std::sqrt(2.0 * lw), dl.se}.holds());
  if (r.has_tail) {
    const ExpTailReport tail{n, r.method, r.tail, 1.0 / std::sqrt(s.w_mu)};
    t.meta("tail.estimate", num(tail.estimate.mean));
    t.meta("tail.se", num(tail.estimate.se));
    t.meta("tail.bound", num(tail.bound));
    out.verdict("exp_tail", tail.holds());
  }
}

inline ParameterPrior parameter_prior(const std::string& name) {
  if (name == "default" || name == "uniform") return ParameterPrior::uniform();
  if (name == "jeffreys") return ParameterPrior::jeffreys();
  throw ConfigInvalid("unknown prior '" + name + "' (uniform, jeffreys, universal-grid)");
}

inline void iid_instantaneous(const ExperimentConfig& c, ExperimentResult& out) {
  const std::size_t nmax = c.n.value_or(2000);
  if (nmax < 2) throw ConfigInvalid("n must be at least 2");
  PathPlan plan;
  plan.trajectories = c.trajectories;
  plan.seed = c.seed.value_or(1);
  plan.workers = c.workers;
  InstantReport rep;
  double theta = 0.0;
  if (c.prior == "universal-grid") {
    const auto s = catalog::bernoulli_setup("universal-grid", c.theta);
    theta = s.theta;
    rep = iid_instantaneous_check(theta, *s.xi, -std::log(s.w_mu), nmax, plan);
  } else {
    theta = c.theta.value_or(0.3);
    rep = iid_instantaneous_check(theta, parameter_prior(c.prior), nmax, plan);
  }
  auto& t = out.table;
  t.meta("method", std::string(to_string(rep.method)));
  t.meta("theta", num(theta));
  t.meta("log_inv_weight", num(rep.log_inv_weight));
  t.meta("peak", num(rep.peak));
  t.meta("constant", num(rep.constant));
  t.meta("early_peak", num(rep.early_peak));
  t.meta("late_peak", num(rep.late_peak));
  t.columns = {"n", "hellinger", "se", "scaled"};
  for (const auto& row : rep.rows) t.add_row({int_cell(row.n), row.hellinger, row.se, row.scaled});
  out.verdict("scaled_bounded", rep.bounded());
}

inline std::shared_ptr<solomonoff::ProgramIndex> load_index(const ExperimentConfig& c) {
  solomonoff::EnumerationBudget b;
  b.max_length = c.L;
  b.max_steps = c.T;
  b.validate();
  solomonoff::BuildOptions opts;
  opts.workers = c.workers;
  return std::make_shared<solomonoff::ProgramIndex>(solomonoff::load_or_build(b, solomonoff::cache_dir(), opts));
}

inline void solomonoff_meta(ResultTable& t, const solomonoff::ProgramIndex& idx) {
  t.meta("isa_version", std::to_string(solomonoff::kInstructionSetVersion));
  t.meta("records", std::to_string(idx.records().size()));
  t.meta("kraft_total", num(idx.kraft_total()));
  t.meta("kraft_committed", num(idx.kraft_committed()));
}

inline void magic_numbers(const ExperimentConfig& c, ExperimentResult& out) {
  require_seed(c);
  const std::size_t hi = c.n.value_or(256);
  const auto idx = load_index(c);
  const auto s = solomonoff::magic_number_scan(*idx, 1, hi, 2000, *c.seed);
  auto& t = out.table;
  solomonoff_meta(t, *idx);
  std::size_t checked = 0, hits = 0;
  for (const auto& p : s.powers) {
    if (p.n < 8) continue;
    ++checked;
    hits += p.local_max() ? 1 : 0;
    t.meta("power." + std::to_string(p.n), num(p.below) + " " + num(p.at) + " " + num(p.above));
  }
  t.meta("powers_checked", std::to_string(checked));
  t.meta("powers_local_max", std::to_string(hits));
  t.meta("spearman", num(s.spearman));
  t.meta("p_value", num(s.p_value));
  t.meta("band_decades", num(s.band_decades));
  t.columns = {"n", "surprise", "k_int", "simple_weight", "ratio", "partial_sum"};
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    const auto& r = s.rows[i];
    t.add_row({int_cell(r.n), r.surprise, r.k_int ? Cell{static_cast<std::int64_t>(*r.k_int)} : Cell{std::string()},
               r.simple_weight, r.ratio, s.partial_sums[i]});
  }
  out.verdict("powers_majority", checked > 0 && 2 * hits > checked);
  out.verdict("rank_correlation", s.spearman > 0.0 && s.p_value < 0.05);
}

inline void computable_convergence(const ExperimentConfig& c, ExperimentResult& out) {
  const std::size_t nmax = c.n.value_or(500);
  const auto idx = load_index(c);
  const auto tr = solomonoff::computable_convergence(*idx, nmax);
  auto& t = out.table;
  solomonoff_meta(t, *idx);
  const solomonoff::ApproxM M(idx);
  const auto audit = semimeasure_audit(M, 8);
  const auto vr = solomonoff::verify_records(idx->records());
  t.meta("audit_depth", "8");
  t.meta("audit_max_violation", num(audit.max_violation));
  std::string blocks;
  for (double b : tr.block_means) blocks += (blocks.empty() ? "" : " ") + num(b);
  t.meta("block_means", blocks);
  t.columns = {"n", "next_one", "next_zero", "deficit_sum", "km", "km_bound"};
  bool km_const = true;
  std::optional<unsigned> km4;
  for (const auto& r : tr.rows) {
    const double bound = r.km ? *r.km * std::numbers::ln2 : std::numeric_limits<double>::infinity();
    t.add_row({int_cell(r.n), r.next_one, r.next_zero, r.deficit_sum,
               r.km ? Cell{static_cast<std::int64_t>(*r.km)} : Cell{std::string()}, bound});
    // The km column refers to 1^(n+1).
    if (r.n + 1 >= 4) {
      if (!km4) km4 = r.km;
      km_const = km_const && r.km && r.km == km4;
    }
  }
  out.verdict("kraft_le_one", idx->kraft_total() <= 1.0);
  out.verdict("prefix_free", vr.prefix_free);
  out.verdict("semimeasure_audit", audit.passes());
  out.verdict("km_constant", km_const);
  out.verdict("blocks_nondecreasing", tr.blocks_nondecreasing);
  out.verdict("deficit_within_km", tr.deficit_within_km);
}

}  // namespace detail

using ExperimentFn = void (*)(const ExperimentConfig&, ExperimentResult&);

inline const std::map<std::string, ExperimentFn>& experiment_catalog() {
  static const std::map<std::string, ExperimentFn> m{
      {"sunrise", detail::sunrise},
      {"raven-confirmation", detail::raven_confirmation},
      {"finite-population", detail::finite_population},
      {"regrouping", detail::regrouping},
      {"bound-suite", detail::bound_suite},
      {"iid-instantaneous", detail::iid_instantaneous},
      {"magic-numbers", detail::magic_numbers},
      {"computable-convergence", detail::computable_convergence},
  };
  return m;
}

inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  const auto& cat = experiment_catalog();
  const auto it = cat.find(config.experiment);
  if (it == cat.end()) throw UnknownExperiment("unknown experiment '" + config.experiment + "'");
  ExperimentResult out;
  out.table.meta("library", std::string("unipred ") + kLibraryVersion);
  for (const auto& [k, v] : config.echo()) out.table.meta("config." + k, v);
  it->second(config, out);
  return out;
}

}  // namespace unipred::lab
