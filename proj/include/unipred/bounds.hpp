#pragma once

// Divergence reports and checks of the Hellinger/KL chain, the exponential
// tail, continuous-class growth and instantaneous i.i.d. behaviour.

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <tuple>
#include <vector>

#include "unipred/conjugate.hpp"
#include "unipred/core.hpp"
#include "unipred/paths.hpp"

namespace unipred {

/// Verdict for "lhs <= rhs": exact values get an absolute tolerance, Monte
/// Carlo values fail only beyond three standard errors.
struct Link {
  double lhs = 0.0;
  double rhs = 0.0;
  double se = 0.0;
  double slack() const { return rhs - lhs; }
  bool holds(double tol = 1e-10) const { return slack() >= -(tol + 3.0 * se); }
};

struct DivergenceReport {
  std::size_t horizon = 0;
  Method method = Method::Exact;
  double value = 0.0;   // D_n(mu || xi)
  double se = 0.0;
  std::optional<double> bound;  // ln 1/w_mu when known
  std::vector<double> profile;  // D_t for t = 1..n
  double slack() const { return bound ? *bound - value : std::numeric_limits<double>::infinity(); }
  bool holds(double tol = 1e-10) const { return !bound || slack() >= -(tol + 3.0 * se); }
};

inline std::vector<double> cumulative(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = s += v[i];
  return out;
}

/// D_n by summing over every sequence of length n.
inline DivergenceReport kl_divergence_exact(const Semimeasure& mu, const Semimeasure& xi, std::size_t n,
                                            std::optional<double> w_mu = std::nullopt,
                                            std::uint64_t cap = std::uint64_t{1} << 20) {
  PathPlan plan;
  plan.method = Method::Exact;
  plan.exact_cap = cap;
  const auto r = evaluate_paths(mu, {&xi}, n, plan);
  DivergenceReport rep;
  rep.horizon = n;
  rep.method = Method::Exact;
  rep.profile = cumulative(r.step_mean[kKL]);
  rep.value = n == 0 ? 0.0 : rep.profile.back();
  if (w_mu) rep.bound = -std::log(*w_mu);
  return rep;
}

struct HellingerReport {
  std::size_t horizon = 0;
  Method method = Method::Exact;
  Estimate ratio_sum;      // sum_t E[(sqrt(xi/mu) - 1)^2]
  Estimate hellinger_sum;  // sum_t E[h_t]
  Estimate divergence;     // D_n
  double bound = std::numeric_limits<double>::infinity();  // ln 1/w_mu
  Link ratio_le_hellinger, hellinger_le_divergence, divergence_le_bound;
  std::vector<double> hellinger_series;  // E[h_t]
  bool holds(double tol = 1e-10) const {
    return ratio_le_hellinger.holds(tol) && hellinger_le_divergence.holds(tol) && divergence_le_bound.holds(tol);
  }
};

/// sum E[(sqrt(xi/mu)-1)^2] <= sum E[h_t] <= D_n <= ln 1/w_mu.
inline HellingerReport total_hellinger_check(const Semimeasure& mu, const Semimeasure& xi, std::size_t n,
                                             const PathPlan& plan, double w_mu) {
  const auto r = evaluate_paths(mu, {&xi}, n, plan);
  HellingerReport rep;
  rep.horizon = n;
  rep.method = r.method;
  rep.ratio_sum = r.total(kRatio);
  rep.hellinger_sum = r.total(kHellinger);
  rep.divergence = r.total(kKL);
  rep.bound = -std::log(w_mu);
  rep.hellinger_series = r.step_mean[kHellinger];
  const auto d1 = r.difference(kRatio, kHellinger);
  const auto d2 = r.difference(kHellinger, kKL);
  rep.ratio_le_hellinger = {rep.ratio_sum.mean, rep.hellinger_sum.mean, d1.se};
  rep.hellinger_le_divergence = {rep.hellinger_sum.mean, rep.divergence.mean, d2.se};
  rep.divergence_le_bound = {rep.divergence.mean, rep.bound, rep.divergence.se};
  return rep;
}

struct ExpTailReport {
  std::size_t horizon = 0;
  Method method = Method::Exact;
  Estimate estimate;  // E[exp(1/2 sum_t h_t)]
  double bound = 1.0; // w_mu^{-1/2}
  bool holds(double tol = 1e-10) const { return estimate.mean <= bound + tol + 3.0 * estimate.se; }
};

inline ExpTailReport exp_tail_check(const Semimeasure& mu, const Semimeasure& xi, std::size_t n,
                                    const PathPlan& plan, double w_mu) {
  PathPlan p = plan;
  if (p.method == Method::Types) throw DomainError("the exponential tail needs whole trajectories");
  const auto r = evaluate_paths(mu, {&xi}, n, p, nullptr, true);
  return ExpTailReport{n, r.method, r.tail, 1.0 / std::sqrt(w_mu)};
}

struct FisherInfo {
  double theta;
  double value;
};

/// 1/theta + 1/(1-theta).
inline FisherInfo bernoulli_fisher(double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw DomainError("Fisher information needs theta in (0,1)");
  return {theta, 1.0 / (theta * (1.0 - theta))};
}

/// Prior on the Bernoulli parameter: a Beta density or a point mass.
struct ParameterPrior {
  std::optional<DirichletPrior> beta;
  double point = 0.5;

  static ParameterPrior beta_prior(double a, double b) { return {DirichletPrior::beta(a, b), 0.0}; }
  static ParameterPrior uniform() { return beta_prior(1.0, 1.0); }
  static ParameterPrior jeffreys() { return beta_prior(0.5, 0.5); }
  static ParameterPrior point_mass(double theta) { return {std::nullopt, theta}; }

  double density(double theta) const {
    if (!beta) return theta == point ? std::numeric_limits<double>::infinity() : 0.0;
    return dirichlet_marginal_density(*beta, 1, theta);
  }
  ModelPtr model() const {
    if (!beta) return bernoulli(point);
    return std::make_shared<DirichletModel>(*beta);
  }
};

struct DnRow {
  std::size_t n;
  double divergence;
  double se;
  double asymptote;  // ln 1/w(theta0) + 1/2 ln(n/2pi) + 1/2 ln j(theta0)
  double residual;   // divergence - asymptote
};

struct DnProfile {
  double theta0 = 0.5;
  Method method = Method::Types;
  std::vector<DnRow> rows;
  double slope = 0.0;      // least squares slope of D_n against ln n
  double intercept = 0.0;
  double residual_spread = 0.0;  // max - min residual over the rows
};

/// Least squares fit y = a + b x; returns (a, b).
inline std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double m = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = m * sxx - sx * sx;
  if (den == 0.0) return {sy / m, 0.0};
  const double b = (m * sxy - sx * sy) / den;
  return {(sy - b * sx) / m, b};
}

/// D_n of the Bayes mixture over Bernoulli(theta) against Bernoulli(theta0)
/// on an n grid. Count classes make this exact for every n.
inline DnProfile continuous_Dn_profile(double theta0, const ParameterPrior& prior, const std::vector<std::size_t>& ns,
                                       const PathPlan& plan = {}) {
  if (!(theta0 > 0.0 && theta0 < 1.0)) throw DomainError("theta0 must lie in (0,1)");
  if (ns.empty()) throw DomainError("empty n grid");
  std::size_t nmax = 0;
  for (auto n : ns) nmax = std::max(nmax, n);
  const auto mu = bernoulli(theta0);
  const auto xi = prior.model();
  PathPlan p = plan;
  if (p.method == Method::Auto) p.method = Method::Types;
  const auto r = evaluate_paths(*mu, {xi.get()}, nmax, p);

  DnProfile prof;
  prof.theta0 = theta0;
  prof.method = r.method;
  const auto dn = cumulative(r.step_mean[kKL]);
  const double j = bernoulli_fisher(theta0).value;
  const double lw = -std::log(prior.density(theta0));
  std::vector<double> xs, ys;
  double rmin = std::numeric_limits<double>::infinity();
  double rmax = -rmin;
  for (auto n : ns) {
    if (n == 0) throw DomainError("n grid must be positive");
    DnRow row;
    row.n = n;
    row.divergence = dn[n - 1];
    row.se = 0.0;
    if (r.trajectories > 0) {
      double var = 0.0;
      for (std::size_t t = 1; t <= n; ++t) var += std::pow(r.step(kKL, t).se, 2);
      row.se = std::sqrt(var);
    }
    row.asymptote = lw + 0.5 * std::log(static_cast<double>(n) / (2.0 * std::numbers::pi)) + 0.5 * std::log(j);
    row.residual = row.divergence - row.asymptote;
    if (!prior.beta) row.asymptote = row.residual = 0.0;
    rmin = std::min(rmin, row.residual);
    rmax = std::max(rmax, row.residual);
    xs.push_back(std::log(static_cast<double>(n)));
    ys.push_back(row.divergence);
    prof.rows.push_back(row);
  }
  std::tie(prof.intercept, prof.slope) = fit_line(xs, ys);
  prof.residual_spread = rmax - rmin;
  return prof;
}

struct InstantRow {
  std::size_t n;
  double hellinger;  // E[h_n]
  double se;
  double scaled;     // n E[h_n]
};

struct InstantReport {
  Method method = Method::Types;
  std::vector<InstantRow> rows;
  double log_inv_weight = 0.0;  // ln 1/w(theta0)
  double peak = 0.0;            // max_n n E[h_n]
  double constant = 0.0;        // peak / max(1, ln 1/w)
  double late_peak = 0.0;       // max over the second half of the range
  double early_peak = 0.0;      // max over the first half of the range
  /// The scaled series levels off: its second half exceeds the first half's
  /// maximum by at most `growth` (relative).
  bool bounded(double growth = 0.05) const { return late_peak <= early_peak * (1.0 + growth); }
};

/// n E[h_n] for the predictor xi against Bernoulli(theta0), n = 1..nmax.
inline InstantReport iid_instantaneous_check(double theta0, const Semimeasure& xi, double log_inv_weight,
                                             std::size_t nmax, const PathPlan& plan = {}) {
  const auto mu = bernoulli(theta0);
  const auto r = evaluate_paths(*mu, {&xi}, nmax, plan);
  InstantReport rep;
  rep.method = r.method;
  rep.log_inv_weight = log_inv_weight;
  for (std::size_t n = 1; n <= nmax; ++n) {
    const auto e = r.step(kHellinger, n);
    const double scaled = static_cast<double>(n) * e.mean;
    rep.rows.push_back({n, e.mean, e.se, scaled});
    rep.peak = std::max(rep.peak, scaled);
    if (2 * n <= nmax) rep.early_peak = std::max(rep.early_peak, scaled);
    else rep.late_peak = std::max(rep.late_peak, scaled);
  }
  rep.constant = rep.peak / std::max(1.0, log_inv_weight);
  return rep;
}

inline InstantReport iid_instantaneous_check(double theta0, const ParameterPrior& prior, std::size_t nmax,
                                             const PathPlan& plan = {}) {
  const auto xi = prior.model();
  const double dens = prior.density(theta0);
  return iid_instantaneous_check(theta0, *xi, -std::log(dens) + 0.0, nmax, plan);
}

}  // namespace unipred
