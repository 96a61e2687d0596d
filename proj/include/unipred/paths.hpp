#pragma once

// Expectations over mu-distributed trajectories of per-step divergences and
// losses. Three evaluation strategies give the same quantities:
//   Exact       - depth-first sum over every sequence in X^n
//   Types       - sum over count classes (binary i.i.d. mu, count-based models)
//   MonteCarlo  - seeded trajectories, reduced in a fixed chunk order

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <string_view>
#include <thread>
#include <vector>

#include "unipred/core.hpp"
#include "unipred/loss.hpp"
#include "unipred/models.hpp"

namespace unipred {

enum class Method { Auto, Exact, Types, MonteCarlo };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::Auto: return "auto";
    case Method::Exact: return "exact";
    case Method::Types: return "types";
    case Method::MonteCarlo: return "monte-carlo";
  }
  return "?";
}

struct PathPlan {
  Method method = Method::Auto;
  std::size_t trajectories = 10000;
  std::uint64_t seed = 1;
  unsigned workers = 0;                       // 0 = hardware concurrency
  std::uint64_t exact_cap = std::uint64_t{1} << 20;  // largest d^n summed exactly
  std::size_t chunk = 64;                     // trajectories per RNG stream
};

/// Mean with its standard error; the error is 0 for exact values.
struct Estimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t count = 0;
};

/// Squared Hellinger distance between two predictive vectors.
inline double hellinger_step(std::span<const double> mu, std::span<const double> xi) {
  if (mu.size() != xi.size()) throw DomainError("predictive vectors differ in size");
  double h = 0.0;
  for (std::size_t a = 0; a < mu.size(); ++a) {
    const double d = std::sqrt(xi[a]) - std::sqrt(mu[a]);
    h += d * d;
  }
  return h;
}

/// Per-trajectory totals are indexed by these slots; model k adds a loss
/// slot at kLoss0 + 2k and a gap slot at kLoss0 + 2k + 1.
enum Slot : std::size_t { kHellinger = 0, kRatio = 1, kKL = 2, kLossMu = 3, kLoss0 = 4 };

struct PathResult {
  Method method = Method::Exact;
  std::size_t horizon = 0;
  std::size_t models = 0;
  std::size_t trajectories = 0;  // Monte Carlo only
  bool has_tail = false;         // exp(1/2 sum h) available

  // step_mean[slot][t-1] = E[quantity at step t]; step_sq holds E[q^2] for MC.
  std::vector<std::vector<double>> step_mean;
  std::vector<std::vector<double>> step_sq;
  // Per-trajectory totals (MC) as rows; exact results leave this empty.
  std::vector<std::vector<double>> totals;
  Estimate tail;  // E[exp(1/2 sum_t h_t)]

  static std::size_t loss_slot(std::size_t k) { return kLoss0 + 2 * k; }
  static std::size_t gap_slot(std::size_t k) { return kLoss0 + 2 * k + 1; }
  std::size_t slots() const { return kLoss0 + 2 * models; }

  /// E[sum_{t<=n} q_t].
  Estimate total(std::size_t slot) const { return combination({{slot, 1.0}}); }
  /// E[sum_t (q_a - q_b)].
  Estimate difference(std::size_t a, std::size_t b) const { return combination({{a, 1.0}, {b, -1.0}}); }

  Estimate combination(std::initializer_list<std::pair<std::size_t, double>> terms) const {
    Estimate e;
    if (totals.empty()) {
      for (auto [s, c] : terms)
        for (double v : step_mean[s]) e.mean += c * v;
      return e;
    }
    double sum = 0.0;
    double sq = 0.0;
    for (const auto& row : totals) {
      double v = 0.0;
      for (auto [s, c] : terms) v += c * row[s];
      sum += v;
      sq += v * v;
    }
    const double m = static_cast<double>(totals.size());
    e.count = totals.size();
    e.mean = sum / m;
    const double var = m > 1 ? std::max(0.0, (sq - m * e.mean * e.mean) / (m - 1)) : 0.0;
    e.se = std::sqrt(var / m);
    return e;
  }

  /// Per-step estimate E[q_t] with its standard error.
  Estimate step(std::size_t slot, std::size_t t) const {
    Estimate e;
    e.mean = step_mean[slot][t - 1];
    if (trajectories > 1) {
      const double m = static_cast<double>(trajectories);
      const double var = std::max(0.0, (step_sq[slot][t - 1] - e.mean * e.mean) * m / (m - 1));
      e.se = std::sqrt(var / m);
      e.count = trajectories;
    }
    return e;
  }
};

namespace detail {

struct StepInputs {
  const LossMatrix* loss;
  std::size_t d;
  std::size_t models;
};

// Fills q with the step quantities for one history.
inline void step_quantities(const StepInputs& in, std::span<const double> mu,
                            const std::vector<std::vector<double>>& preds, std::vector<double>& q) {
  const auto& xi = preds[0];
  q[kHellinger] = hellinger_step(mu, xi);
  double ratio = 0.0;
  double kl = 0.0;
  for (std::size_t a = 0; a < in.d; ++a) {
    if (mu[a] <= 0.0) continue;
    const double r = std::sqrt(xi[a] / mu[a]) - 1.0;
    ratio += mu[a] * r * r;
    kl += xi[a] > 0.0 ? mu[a] * std::log(mu[a] / xi[a]) : std::numeric_limits<double>::infinity();
  }
  q[kRatio] = ratio;
  q[kKL] = kl;
  if (in.loss == nullptr) {
    for (std::size_t s = kLossMu; s < q.size(); ++s) q[s] = 0.0;
    return;
  }
  const double lmu = in.loss->expected(mu, bayes_act(mu, *in.loss).action);
  q[kLossMu] = lmu;
  for (std::size_t k = 0; k < in.models; ++k) {
    const double lk = in.loss->expected(mu, bayes_act(preds[k], *in.loss).action);
    const double g = std::sqrt(lk) - std::sqrt(lmu);
    q[PathResult::loss_slot(k)] = lk;
    q[PathResult::gap_slot(k)] = g * g;
  }
}

inline std::vector<double> probs_of(const Tracker& tr, std::size_t d) { return predictive_probs(tr, d); }

struct TrackerSet {
  std::unique_ptr<Tracker> mu;
  std::vector<std::unique_ptr<Tracker>> models;

  TrackerSet clone() const {
    TrackerSet t{mu->clone(), {}};
    for (const auto& m : models) t.models.push_back(m->clone());
    return t;
  }
  void push(Symbol a) {
    mu->push(a);
    for (auto& m : models) m->push(a);
  }
};

inline bool types_applicable(const Semimeasure& mu, const std::vector<const Semimeasure*>& models) {
  if (mu.alphabet().size != 2 || dynamic_cast<const Categorical*>(&mu) == nullptr) return false;
  for (const auto* m : models)
    if (dynamic_cast<const CountModel*>(m) == nullptr) return false;
  return true;
}

}  // namespace detail

/// Evaluates per-step expectations under mu for model 0 (divergences) and
/// every model (losses, if `loss` is given). `want_tail` requests
/// E[exp(1/2 sum h)], which the Types strategy cannot provide.
inline PathResult evaluate_paths(const Semimeasure& mu, const std::vector<const Semimeasure*>& models,
                                 std::size_t n, const PathPlan& plan, const LossMatrix* loss = nullptr,
                                 bool want_tail = false) {
  if (models.empty()) throw DomainError("at least one predictor required");
  if (!mu.is_measure()) throw NotAMeasure("trajectories need a measure mu");
  const std::size_t d = mu.alphabet().size;
  for (const auto* m : models)
    if (m->alphabet().size != d) throw DomainError("models disagree on the alphabet");
  if (loss != nullptr && loss->observations() != d) throw DomainError("loss matrix observation count mismatch");

  const double space = std::pow(static_cast<double>(d), static_cast<double>(n));
  Method method = plan.method;
  if (method == Method::Auto) {
    if (space <= static_cast<double>(plan.exact_cap)) method = Method::Exact;
    else if (!want_tail && detail::types_applicable(mu, models)) method = Method::Types;
    else method = Method::MonteCarlo;
  }
  if (method == Method::Exact && space > static_cast<double>(plan.exact_cap))
    throw BudgetExceeded("exact enumeration exceeds the configured cap");
  if (method == Method::Types && !detail::types_applicable(mu, models))
    throw DomainError("type-class summation needs binary i.i.d. mu and count-based models");
  if (method == Method::MonteCarlo && plan.trajectories < 2) throw DomainError("need at least two trajectories");

  PathResult r;
  r.method = method;
  r.horizon = n;
  r.models = models.size();
  const std::size_t slots = r.slots();
  r.step_mean.assign(slots, std::vector<double>(n, 0.0));
  r.step_sq.assign(slots, std::vector<double>(n, 0.0));
  const detail::StepInputs in{loss, d, models.size()};

  if (method == Method::Exact) {
    r.has_tail = true;
    detail::TrackerSet root{mu.track(), {}};
    for (const auto* m : models) root.models.push_back(m->track());
    std::vector<double> q(slots);
    double tail = 0.0;
    auto visit = [&](auto&& self, detail::TrackerSet& ts, std::size_t depth, double weight, double hsum) -> void {
      if (depth == n) {
        tail += weight * std::exp(0.5 * hsum);
        return;
      }
      const auto mp = detail::probs_of(*ts.mu, d);
      std::vector<std::vector<double>> preds;
      for (const auto& m : ts.models) preds.push_back(detail::probs_of(*m, d));
      detail::step_quantities(in, mp, preds, q);
      for (std::size_t s = 0; s < slots; ++s) {
        r.step_mean[s][depth] += weight * q[s];
        r.step_sq[s][depth] += weight * q[s] * q[s];
      }
      const double h = q[kHellinger];
      for (std::size_t a = 0; a < d; ++a) {
        if (mp[a] <= 0.0) continue;
        if (depth + 1 == n) {
          tail += weight * mp[a] * std::exp(0.5 * (hsum + h));
          continue;
        }
        auto child = ts.clone();
        child.push(static_cast<Symbol>(a));
        self(self, child, depth + 1, weight * mp[a], hsum + h);
      }
    };
    visit(visit, root, 0, 1.0, 0.0);
    r.tail.mean = tail;
    return r;
  }

  if (method == Method::Types) {
    const auto& cat = static_cast<const Categorical&>(mu);
    const double theta = cat.probs()[1];
    std::vector<const CountModel*> cms;
    for (const auto* m : models) cms.push_back(static_cast<const CountModel*>(m));
    const std::vector<double> mp = cat.probs();
    std::vector<std::vector<double>> preds(models.size(), std::vector<double>(2));
    std::vector<double> q(slots);
    for (std::size_t t = 1; t <= n; ++t) {
      const std::uint64_t m = t - 1;
      for (std::uint64_t k = 0; k <= m; ++k) {
        const double lw = std::lgamma(m + 1.0) - std::lgamma(k + 1.0) - std::lgamma(m - k + 1.0) +
                          xlogy(static_cast<double>(k), theta) + xlogy(static_cast<double>(m - k), 1.0 - theta);
        if (lw < -745.0) continue;  // below the smallest double
        const double w = std::exp(lw);
        const CountVector c = CountVector::binary(m - k, k);
        for (std::size_t j = 0; j < cms.size(); ++j)
          for (Symbol a = 0; a < 2; ++a) preds[j][a] = cms[j]->predictive_of_counts(c, a).prob();
        detail::step_quantities(in, mp, preds, q);
        for (std::size_t s = 0; s < slots; ++s) {
          r.step_mean[s][t - 1] += w * q[s];
          r.step_sq[s][t - 1] += w * q[s] * q[s];
        }
      }
    }
    return r;
  }

  // Monte Carlo
  r.has_tail = true;
  r.trajectories = plan.trajectories;
  const std::size_t chunk = std::max<std::size_t>(1, plan.chunk);
  const std::size_t chunks = (plan.trajectories + chunk - 1) / chunk;
  struct ChunkResult {
    std::vector<std::vector<double>> sum, sq;
    std::vector<std::vector<double>> totals;
    std::vector<double> tails;
  };
  std::vector<ChunkResult> results(chunks);
  detail::TrackerSet root{mu.track(), {}};
  for (const auto* m : models) root.models.push_back(m->track());

  auto run_chunk = [&](std::size_t c) {
    ChunkResult cr;
    cr.sum.assign(slots, std::vector<double>(n, 0.0));
    cr.sq.assign(slots, std::vector<double>(n, 0.0));
    std::mt19937_64 rng(mix_seed(plan.seed, c));
    const std::size_t begin = c * chunk;
    const std::size_t end = std::min(plan.trajectories, begin + chunk);
    std::vector<double> q(slots);
    std::vector<LogMass> lm(d);
    for (std::size_t i = begin; i < end; ++i) {
      auto ts = root.clone();
      std::vector<double> tot(slots, 0.0);
      double hsum = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        ts.mu->predictive(lm);
        std::vector<double> mp(d);
        for (std::size_t a = 0; a < d; ++a) mp[a] = lm[a].prob();
        std::vector<std::vector<double>> preds;
        for (const auto& m : ts.models) preds.push_back(detail::probs_of(*m, d));
        detail::step_quantities(in, mp, preds, q);
        for (std::size_t s = 0; s < slots; ++s) {
          cr.sum[s][t] += q[s];
          cr.sq[s][t] += q[s] * q[s];
          tot[s] += q[s];
        }
        hsum += q[kHellinger];
        ts.push(draw_symbol(std::span<const LogMass>(lm), rng));
      }
      cr.totals.push_back(std::move(tot));
      cr.tails.push_back(std::exp(0.5 * hsum));
    }
    results[c] = std::move(cr);
  };

  unsigned workers = plan.workers != 0 ? plan.workers : std::max(1U, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, chunks));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t c = next++; c < chunks; c = next++) run_chunk(c);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  const double m = static_cast<double>(plan.trajectories);
  double tsum = 0.0;
  double tsq = 0.0;
  for (auto& cr : results) {
    for (std::size_t s = 0; s < slots; ++s)
      for (std::size_t t = 0; t < n; ++t) {
        r.step_mean[s][t] += cr.sum[s][t];
        r.step_sq[s][t] += cr.sq[s][t];
      }
    for (auto& row : cr.totals) r.totals.push_back(std::move(row));
    for (double v : cr.tails) {
      tsum += v;
      tsq += v * v;
    }
  }
  for (std::size_t s = 0; s < slots; ++s)
    for (std::size_t t = 0; t < n; ++t) {
      r.step_mean[s][t] /= m;
      r.step_sq[s][t] /= m;
    }
  r.tail.count = plan.trajectories;
  r.tail.mean = tsum / m;
  r.tail.se = std::sqrt(std::max(0.0, (tsq - m * r.tail.mean * r.tail.mean) / (m - 1)) / m);
  return r;
}

/// Mean and standard error of statistic(x_{1:horizon}) over seeded
/// trajectories drawn from env; independent of the worker count.
template <class Statistic>
Estimate mc_expectation(const Semimeasure& env, Statistic&& statistic, std::size_t trajectories,
                        std::size_t horizon, std::uint64_t seed, unsigned workers = 0, std::size_t chunk = 64) {
  if (trajectories < 2) throw DomainError("need at least two trajectories");
  const std::size_t chunks = (trajectories + chunk - 1) / chunk;
  std::vector<std::pair<double, double>> parts(chunks);
  auto run_chunk = [&](std::size_t c) {
    double s = 0.0;
    double sq = 0.0;
    const std::size_t begin = c * chunk;
    const std::size_t end = std::min(trajectories, begin + chunk);
    for (std::size_t i = begin; i < end; ++i) {
      const Seq x = sample_sequence(env, horizon, mix_seed(seed, i));
      const double v = statistic(SeqView(x));
      s += v;
      sq += v * v;
    }
    parts[c] = {s, sq};
  };
  unsigned w = workers != 0 ? workers : std::max(1U, std::thread::hardware_concurrency());
  w = static_cast<unsigned>(std::min<std::size_t>(w, chunks));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t c = next++; c < chunks; c = next++) run_chunk(c);
  };
  if (w <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < w; ++k) pool.emplace_back(work);
  }
  double s = 0.0;
  double sq = 0.0;
  for (auto [a, b] : parts) {
    s += a;
    sq += b;
  }
  const double m = static_cast<double>(trajectories);
  Estimate e;
  e.count = trajectories;
  e.mean = s / m;
  e.se = std::sqrt(std::max(0.0, (sq - m * e.mean * e.mean) / (m - 1)) / m);
  return e;
}

}  // namespace unipred
