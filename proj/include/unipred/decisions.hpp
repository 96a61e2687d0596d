#pragma once

// Loss accounting for rho-optimal predictors and the loss bound.

#include <cmath>
#include <string>
#include <vector>

#include "unipred/bounds.hpp"
#include "unipred/loss.hpp"
#include "unipred/paths.hpp"

namespace unipred {

struct LossLedger {
  Method method = Method::Exact;
  std::vector<std::string> names;                 // "mu" first, then the predictors
  std::vector<std::vector<double>> instantaneous; // l_t per predictor
  std::vector<std::vector<double>> cumulative;    // L_t per predictor
  std::vector<Estimate> totals;                   // L_n per predictor
};

/// Expected instantaneous and cumulative losses of Lambda_mu and Lambda_rho
/// for every predictor rho.
inline LossLedger loss_ledger(const Semimeasure& mu, const std::vector<ModelPtr>& predictors, const LossMatrix& loss,
                              std::size_t n, const PathPlan& plan = {}) {
  std::vector<const Semimeasure*> ms;
  for (const auto& p : predictors) ms.push_back(p.get());
  const auto r = evaluate_paths(mu, ms, n, plan, &loss);
  LossLedger led;
  led.method = r.method;
  led.names.push_back("mu");
  led.instantaneous.push_back(r.step_mean[kLossMu]);
  led.totals.push_back(r.total(kLossMu));
  for (std::size_t k = 0; k < predictors.size(); ++k) {
    led.names.push_back(predictors[k]->name());
    led.instantaneous.push_back(r.step_mean[PathResult::loss_slot(k)]);
    led.totals.push_back(r.total(PathResult::loss_slot(k)));
  }
  for (const auto& l : led.instantaneous) led.cumulative.push_back(cumulative(l));
  return led;
}

struct LossBoundReport {
  Method method = Method::Exact;
  Estimate loss_mu, loss_xi;  // L_n
  double lhs = 0.0;           // (sqrt L_xi - sqrt L_mu)^2
  Estimate gap_sum;           // sum_t E[(sqrt l_xi - sqrt l_mu)^2]
  Estimate twice_hellinger;   // 2 sum_t E[h_t]
  double excess = 0.0;        // sqrt L_xi - sqrt L_mu
  double excess_bound = 0.0;  // sqrt(2 ln 1/w_mu)
  Link first, second, corollary;
  bool holds(double tol = 1e-10) const { return first.holds(tol) && second.holds(tol) && corollary.holds(tol); }
};

/// (sqrt L_xi - sqrt L_mu)^2 <= sum E[(sqrt l_xi - sqrt l_mu)^2] <= 2 sum E[h_t]
/// and sqrt L_xi <= sqrt L_mu + sqrt(2 ln 1/w_mu).
inline LossBoundReport loss_bound_check(const Semimeasure& mu, const Semimeasure& xi, const LossMatrix& loss,
                                        std::size_t n, const PathPlan& plan, double w_mu) {
  const auto r = evaluate_paths(mu, {&xi}, n, plan, &loss);
  LossBoundReport rep;
  rep.method = r.method;
  rep.loss_mu = r.total(kLossMu);
  rep.loss_xi = r.total(PathResult::loss_slot(0));
  rep.gap_sum = r.total(PathResult::gap_slot(0));
  rep.twice_hellinger = r.combination({{kHellinger, 2.0}});
  rep.excess = std::sqrt(rep.loss_xi.mean) - std::sqrt(rep.loss_mu.mean);
  rep.lhs = rep.excess * rep.excess;
  rep.excess_bound = std::sqrt(-2.0 * std::log(w_mu));
  // The square of a difference of square roots of estimates is biased; MC
  // verdicts use the standard error of the loss difference as a proxy.
  const auto dl = r.difference(PathResult::loss_slot(0), kLossMu);
  const auto dg = r.combination({{PathResult::gap_slot(0), 1.0}, {kHellinger, -2.0}});
  rep.first = {rep.lhs, rep.gap_sum.mean, dl.se};
  rep.second = {rep.gap_sum.mean, rep.twice_hellinger.mean, dg.se};
  rep.corollary = {rep.excess, rep.excess_bound, dl.se};
  return rep;
}

/// (sqrt(sum v a) - sqrt(sum v b))^2 <= sum v (sqrt a - sqrt b)^2; returns
/// right side minus left side.
inline double hellinger_mixture_inequality(std::span<const double> v, std::span<const double> a,
                                           std::span<const double> b) {
  if (v.size() != a.size() || v.size() != b.size()) throw DomainError("vectors differ in size");
  double va = 0.0, vb = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] < 0.0 || a[i] < 0.0 || b[i] < 0.0) throw DomainError("entries must be nonnegative");
    va += v[i] * a[i];
    vb += v[i] * b[i];
    const double d = std::sqrt(a[i]) - std::sqrt(b[i]);
    rhs += v[i] * d * d;
  }
  const double l = std::sqrt(va) - std::sqrt(vb);
  return rhs - l * l;
}

}  // namespace unipred
