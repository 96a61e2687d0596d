#pragma once

// Closed-form i.i.d. predictors: Dirichlet/Laplace, the Dirac-mixed prior,
// finite populations, regrouping, reparametrization and the grid universal
// prior.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "unipred/core.hpp"
#include "unipred/mixture.hpp"
#include "unipred/models.hpp"

namespace unipred {

/// Marks an unbounded continuation length (k = infinity).
inline constexpr std::uint64_t kUnbounded = std::numeric_limits<std::uint64_t>::max();

namespace detail {
inline double lfact(std::uint64_t n) { return std::lgamma(static_cast<double>(n) + 1.0); }
inline double ratio(std::uint64_t num, std::uint64_t den) {
  return static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Dirichlet family

struct DirichletPrior {
  std::vector<double> alpha;
  bool haldane = false;  // the improper alpha -> 0 limit

  static DirichletPrior symmetric(std::size_t d, double a) {
    if (!(a > 0.0)) throw DomainError("Dirichlet concentrations must be positive");
    return DirichletPrior{std::vector<double>(d, a), false};
  }
  static DirichletPrior uniform(std::size_t d = 2) { return symmetric(d, 1.0); }
  static DirichletPrior jeffreys(std::size_t d = 2) { return symmetric(d, 0.5); }
  static DirichletPrior haldane_limit(std::size_t d = 2) { return DirichletPrior{std::vector<double>(d, 0.0), true}; }
  /// Beta(a, b) on theta = P(symbol 1).
  static DirichletPrior beta(double a, double b) {
    if (!(a > 0.0 && b > 0.0)) throw DomainError("Beta parameters must be positive");
    return DirichletPrior{{b, a}, false};
  }

  std::size_t size() const { return alpha.size(); }
  double total() const { return std::accumulate(alpha.begin(), alpha.end(), 0.0); }

  void validate() const {
    if (alpha.size() < 2) throw DomainError("Dirichlet prior needs at least two symbols");
    for (double a : alpha) {
      if (haldane && a != 0.0) throw DomainError("Haldane marker requires zero concentrations");
      if (!haldane && !(a > 0.0)) throw DomainError("Dirichlet concentrations must be positive");
    }
  }
  friend bool operator==(const DirichletPrior&, const DirichletPrior&) = default;
};

/// xi(a|x) = (n_a + alpha_a) / (n + sum alpha).
inline double dirichlet_predictive(const CountVector& c, const DirichletPrior& prior, Symbol a) {
  prior.validate();
  if (c.size() != prior.size()) throw DomainError("count vector and prior disagree on the alphabet");
  if (a >= c.size()) throw DomainError("symbol outside alphabet");
  const double n = static_cast<double>(c.total());
  if (prior.haldane && n == 0.0) throw HaldaneUndefined("Haldane predictive undefined before any data");
  return (static_cast<double>(c[a]) + prior.alpha[a]) / (n + prior.total());
}

/// Dirichlet-multinomial evidence
///   Gamma(A) / Gamma(n + A) * prod_a Gamma(n_a + alpha_a) / Gamma(alpha_a).
/// The Haldane limit puts mass 1/d on each constant sequence.
inline LogMass dirichlet_evidence(const CountVector& c, const DirichletPrior& prior) {
  prior.validate();
  if (c.size() != prior.size()) throw DomainError("count vector and prior disagree on the alphabet");
  const std::uint64_t n = c.total();
  if (n == 0) return LogMass::one();
  if (prior.haldane) {
    std::size_t nonzero = 0;
    for (auto k : c.counts) nonzero += k > 0 ? 1 : 0;
    return nonzero == 1 ? LogMass::from_prob(1.0 / static_cast<double>(c.size())) : LogMass::zero();
  }
  const double A = prior.total();
  double lm = std::lgamma(A) - std::lgamma(static_cast<double>(n) + A);
  for (std::size_t a = 0; a < c.size(); ++a)
    lm += std::lgamma(static_cast<double>(c[a]) + prior.alpha[a]) - std::lgamma(prior.alpha[a]);
  return LogMass::from_log(lm);
}

class DirichletModel final : public CountModel {
 public:
  explicit DirichletModel(DirichletPrior prior) : prior_(std::move(prior)), alphabet_(prior_.size()) {
    prior_.validate();
  }
  Alphabet alphabet() const override { return alphabet_; }
  bool is_measure() const override { return true; }
  std::string name() const override {
    if (prior_.haldane) return "haldane";
    std::string s = "dirichlet(";
    for (std::size_t a = 0; a < prior_.size(); ++a) s += (a ? "," : "") + std::to_string(prior_.alpha[a]);
    return s + ")";
  }
  LogMass mass_of_counts(const CountVector& c) const override { return dirichlet_evidence(c, prior_); }
  LogMass predictive_of_counts(const CountVector& c, Symbol a) const override {
    if (prior_.haldane && c.total() > 0 && mass_of_counts(c).is_zero())
      throw ConditioningOnNull("predictive conditioned on a zero-mass string");
    return LogMass::from_prob(dirichlet_predictive(c, prior_, a));
  }
  const DirichletPrior& prior() const { return prior_; }

 private:
  DirichletPrior prior_;
  Alphabet alphabet_;
};

inline std::shared_ptr<DirichletModel> laplace_model() {
  return std::make_shared<DirichletModel>(DirichletPrior::uniform(2));
}

// ---------------------------------------------------------------------------
// Laplace rule (binary, uniform prior); counts are (n_0, n_1).

inline void require_binary(const CountVector& c) {
  if (c.size() != 2) throw DomainError("binary alphabet required");
}

/// n_1! n_0! / (n+1)! = B(n_1 + 1, n_0 + 1). The beta function keeps full
/// relative precision where lgamma differences would cancel.
inline LogMass laplace_evidence(const CountVector& c) {
  require_binary(c);
  const double lg = detail::lfact(c[0]) + detail::lfact(c[1]) - detail::lfact(c.total() + 1);
  if (lg > -650.0)
    return LogMass::from_log(std::log(boost::math::beta(static_cast<double>(c[1]) + 1.0, static_cast<double>(c[0]) + 1.0)));
  return LogMass::from_log(lg);
}

/// (n_1 + 1) / (n + 2)
inline double laplace_predictive(const CountVector& c) {
  require_binary(c);
  return detail::ratio(c[1] + 1, c.total() + 2);
}

/// Beta(n_1 + 1, n_0 + 1) density at theta.
inline double posterior_density(const CountVector& c, double theta) {
  require_binary(c);
  if (!(theta >= 0.0 && theta <= 1.0)) throw DomainError("theta outside [0,1]");
  const double n1 = static_cast<double>(c[1]);
  const double n0 = static_cast<double>(c[0]);
  const double lw = detail::lfact(c.total() + 1) - detail::lfact(c[1]) - detail::lfact(c[0]) + xlogy(n1, theta) +
                    xlogy(n0, 1.0 - theta);
  return std::exp(lw);
}

/// P[theta >= 1 - eps | 1^n] = 1 - (1 - eps)^{n+1} under the uniform prior.
inline double relaxed_hypothesis_posterior(std::uint64_t n, double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw DomainError("epsilon outside [0,1]");
  if (eps == 1.0) return 1.0;
  return -std::expm1(static_cast<double>(n + 1) * std::log1p(-eps));
}

/// xi(1^k | 1^n) = (n+1)/(n+k+1) under the uniform prior; k = kUnbounded gives 0.
inline double universal_seq_posterior_uniform(std::uint64_t n, std::uint64_t k) {
  if (k == kUnbounded) return 0.0;
  return detail::ratio(n + 1, n + k + 1);
}

/// P[all N observed objects are 1 | first n were 1] = (n+1)/(N+1).
inline double finite_population_posterior(std::uint64_t n, std::uint64_t N) {
  if (n > N) throw InvalidPopulation("more observations than population members");
  return detail::ratio(n + 1, N + 1);
}

// ---------------------------------------------------------------------------
// Mixed continuous / point-mass prior on theta = P(1)

struct PointMass {
  double theta;
  double mass;
};

/// w(theta) = c * uniform + sum_j p_j delta(theta - theta_j), total mass 1.
struct MixedDiracPrior {
  double continuous_weight = 0.5;
  std::vector<PointMass> points{{1.0, 0.5}};

  /// w(theta) = 1/2 [1 + delta(1 - theta)]
  static MixedDiracPrior raven() { return {}; }

  void validate() const {
    if (!(continuous_weight >= 0.0)) throw DomainError("negative continuous weight");
    double total = continuous_weight;
    for (const auto& p : points) {
      if (!(p.mass > 0.0)) throw DomainError("point masses must be positive");
      if (!(p.theta >= 0.0 && p.theta <= 1.0)) throw DomainError("point mass location outside [0,1]");
      total += p.mass;
    }
    if (std::abs(total - 1.0) > kMeasureTolerance) throw DomainError("prior mass must total 1");
  }
};

class DiracMixedModel final : public CountModel {
 public:
  explicit DiracMixedModel(MixedDiracPrior prior = MixedDiracPrior::raven()) : prior_(std::move(prior)) {
    prior_.validate();
  }
  Alphabet alphabet() const override { return Alphabet(2); }
  bool is_measure() const override { return true; }
  std::string name() const override { return "dirac-mixed"; }

  LogMass mass_of_counts(const CountVector& c) const override {
    require_binary(c);
    LogMass m = prior_.continuous_weight > 0.0
                    ? LogMass::from_prob(prior_.continuous_weight) * laplace_evidence(c)
                    : LogMass::zero();
    for (const auto& p : prior_.points) {
      const double ll = xlogy(static_cast<double>(c[1]), p.theta) + xlogy(static_cast<double>(c[0]), 1.0 - p.theta);
      m += LogMass::from_prob(p.mass) * LogMass::from_log(ll);
    }
    return m;
  }

  const MixedDiracPrior& prior() const { return prior_; }

 private:
  MixedDiracPrior prior_;
};

/// 1/2 [n_1! n_0! / (n+1)! + delta_{0, n_0}]
inline LogMass dirac_evidence(const CountVector& c) { return DiracMixedModel().mass_of_counts(c); }

/// xi(1^k | 1^n) = ((n+k+2)/(n+k+1)) ((n+1)/(n+2)) under the raven prior.
/// k = kUnbounded gives P[H''|1^n] = (n+1)/(n+2).
inline double dirac_confirmation(std::uint64_t n, std::uint64_t k) {
  if (k == kUnbounded) return detail::ratio(n + 1, n + 2);
  const double a = static_cast<double>(n + k + 2) * static_cast<double>(n + 1);
  const double b = static_cast<double>(n + k + 1) * static_cast<double>(n + 2);
  return a / b;
}

/// xi(0 | 1^n) = 1/(n+2)^2 under the raven prior.
inline double dirac_next_zero(std::uint64_t n) {
  const double m = static_cast<double>(n + 2);
  return 1.0 / (m * m);
}

/// P[theta = 1 | 1^n] = (n+1)/(n+2) under the raven prior.
inline double dirac_point_posterior(std::uint64_t n) { return detail::ratio(n + 1, n + 2); }

// ---------------------------------------------------------------------------
// Regrouping and reparametrization

/// Merges symbols: new concentration of group g is the sum over f^{-1}(g).
inline DirichletPrior regroup_prior(const DirichletPrior& prior, const std::vector<std::size_t>& f) {
  prior.validate();
  if (f.size() != prior.size()) throw DomainError("grouping map must cover every symbol");
  std::size_t groups = 0;
  for (auto g : f) groups = std::max(groups, g + 1);
  std::vector<bool> hit(groups, false);
  for (auto g : f) hit[g] = true;
  for (bool h : hit)
    if (!h) throw DomainError("grouping map is not surjective");
  DirichletPrior out{std::vector<double>(groups, 0.0), prior.haldane};
  for (std::size_t a = 0; a < f.size(); ++a) out.alpha[f[a]] += prior.alpha[a];
  return out;
}

/// Counts of the coarse alphabet.
inline CountVector regroup_counts(const CountVector& c, const std::vector<std::size_t>& f) {
  std::size_t groups = 0;
  for (auto g : f) groups = std::max(groups, g + 1);
  CountVector out(groups);
  for (std::size_t a = 0; a < c.size(); ++a) out[f[a]] += c[a];
  return out;
}

/// Marginal density of theta_i under Dirichlet(alpha): Beta(alpha_i, A - alpha_i).
inline double dirichlet_marginal_density(const DirichletPrior& prior, std::size_t i, double theta) {
  prior.validate();
  if (prior.haldane) throw HaldaneUndefined("Haldane prior has no density");
  if (!(theta > 0.0 && theta < 1.0)) throw DomainError("theta outside (0,1)");
  const double a = prior.alpha.at(i);
  const double b = prior.total() - a;
  const double lb = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  return std::exp((a - 1.0) * std::log(theta) + (b - 1.0) * std::log1p(-theta) - lb);
}

using Density = std::function<double(double)>;

/// w~(t) = w(f(t)) |f'(t)|. f must be strictly monotone on (lo, hi), which is
/// checked on `grid` interior points.
inline Density reparam_density(Density w, std::function<double(double)> f, std::function<double(double)> fprime,
                               double lo = 0.0, double hi = 1.0, std::size_t grid = 1000) {
  int sign = 0;
  double prev = 0.0;
  for (std::size_t i = 1; i < grid; ++i) {
    const double t = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid);
    const double d = fprime(t);
    const int s = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
    if (s == 0 || (sign != 0 && s != sign)) throw NonMonotone("reparametrization is not strictly monotone");
    const double v = f(t);
    if (i > 1 && (v - prev) * s <= 0.0) throw NonMonotone("reparametrization is not strictly monotone");
    sign = s;
    prev = v;
  }
  return [w = std::move(w), f = std::move(f), fprime = std::move(fprime)](double t) {
    return w(f(t)) * std::abs(fprime(t));
  };
}

/// (1/pi) [theta (1 - theta)]^{-1/2}
inline double jeffreys_bernoulli_density(double theta) {
  return 1.0 / (std::numbers::pi * std::sqrt(theta * (1.0 - theta)));
}

// ---------------------------------------------------------------------------
// Grid universal prior

/// Length in bits of the Elias gamma code of m >= 1.
inline unsigned elias_gamma_length(std::uint64_t m) {
  if (m == 0) throw DomainError("Elias gamma needs m >= 1");
  unsigned bits = 0;
  while ((m >> (bits + 1)) != 0) ++bits;
  return 2 * bits + 1;
}

/// Stub complexity of the rational p/q in lowest terms: gamma(q), a side bit,
/// and gamma(min(p, q-p) + 1). Symmetric under theta -> 1 - theta and
/// prefix-free over all rationals in [0,1].
inline unsigned stub_complexity(std::uint64_t p, std::uint64_t q) {
  if (q == 0 || p > q) throw DomainError("rational outside [0,1]");
  const std::uint64_t g = std::gcd(p, q);
  p /= g;
  q /= g;
  return elias_gamma_length(q) + 1 + elias_gamma_length(std::min(p, q - p) + 1);
}

struct GridPoint {
  double theta;
  unsigned complexity;  // K^(theta) in bits
};

struct GridUniversalPrior {
  std::vector<GridPoint> points;

  /// Points p_i/q_i weighted by the stub coder.
  static GridUniversalPrior stub(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& rationals) {
    GridUniversalPrior g;
    for (auto [p, q] : rationals)
      g.points.push_back({static_cast<double>(p) / static_cast<double>(q), stub_complexity(p, q)});
    g.validate();
    return g;
  }

  void validate() const {
    if (points.empty()) throw DomainError("empty parameter grid");
    double total = 0.0;
    for (const auto& pt : points) {
      if (!(pt.theta >= 0.0 && pt.theta <= 1.0)) throw DomainError("grid point outside [0,1]");
      total += std::ldexp(1.0, -static_cast<int>(pt.complexity));
    }
    if (total > 1.0 + kMeasureTolerance) throw DomainError("grid weights sum above 1");
  }

  double weight(std::size_t i) const { return std::ldexp(1.0, -static_cast<int>(points[i].complexity)); }

  WeightedClass model_class() const {
    validate();
    std::vector<ModelPtr> members;
    std::vector<double> weights;
    for (std::size_t i = 0; i < points.size(); ++i) {
      members.push_back(bernoulli(points[i].theta));
      weights.push_back(weight(i));
    }
    return WeightedClass(std::move(members), std::move(weights));
  }
};

/// Posterior over grid points after the counts.
inline std::vector<double> grid_posterior(const GridUniversalPrior& prior, const CountVector& c) {
  require_binary(c);
  const auto cls = prior.model_class();
  std::vector<LogMass> joint(cls.size());
  for (std::size_t i = 0; i < cls.size(); ++i) {
    const auto& m = static_cast<const CountModel&>(*cls.members[i]);
    joint[i] = LogMass::from_prob(cls.weights[i]) * m.mass_of_counts(c);
  }
  const LogMass total = log_sum(joint);
  if (total.is_zero()) throw ConditioningOnNull("grid posterior conditioned on impossible data");
  std::vector<double> post(cls.size());
  for (std::size_t i = 0; i < cls.size(); ++i) post[i] = (joint[i] / total).prob();
  return post;
}

/// Bayes mixture predictive over the grid with weights 2^{-K^(theta)}.
inline double grid_universal_predictive(const GridUniversalPrior& prior, const CountVector& c, Symbol a) {
  if (a > 1) throw DomainError("symbol outside alphabet");
  const auto post = grid_posterior(prior, c);
  double p1 = 0.0;
  for (std::size_t i = 0; i < post.size(); ++i) p1 += post[i] * prior.points[i].theta;
  return a == 1 ? p1 : 1.0 - p1;
}

}  // namespace unipred
