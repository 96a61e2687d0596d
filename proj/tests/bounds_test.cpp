#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "unipred/bounds.hpp"
#include "unipred/catalog.hpp"
#include "unipred/mixture.hpp"

using namespace unipred;

namespace {

// Brute-force oracle over all binary strings of length n, using only
// model masses: per-step E[h_t], E[(sqrt(xi/mu)-1)^2], D_n and the tail.
struct Oracle {
  std::vector<double> h, ratio;
  double divergence = 0.0;
  double tail = 0.0;
};

Oracle brute_force(const Semimeasure& mu, const Semimeasure& xi, std::size_t n) {
  Oracle o;
  o.h.assign(n, 0.0);
  o.ratio.assign(n, 0.0);
  for (std::uint64_t v = 0; v < (std::uint64_t{1} << n); ++v) {
    Seq x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<Symbol>((v >> i) & 1U);
    const double px = mu.mass(x).prob();
    if (px == 0.0) continue;
    double hsum = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const SeqView prefix(x.data(), t);
      const double pmu = mu.mass(prefix).prob();
      const double pxi = xi.mass(prefix).prob();
      double h = 0.0, r = 0.0;
      Seq xa(prefix.begin(), prefix.end());
      xa.push_back(0);
      for (Symbol a : {Symbol{0}, Symbol{1}}) {
        xa.back() = a;
        const double m = mu.mass(xa).prob() / pmu;
        const double q = xi.mass(xa).prob() / pxi;
        h += std::pow(std::sqrt(q) - std::sqrt(m), 2);
        if (m > 0) r += m * std::pow(std::sqrt(q / m) - 1.0, 2);
      }
      hsum += h;
      // Weight of this path's step-t history equals mu(x) summed over the
      // remaining suffixes, so accumulating px per full string is exact.
      o.h[t] += px * h;
      o.ratio[t] += px * r;
    }
    o.divergence += px * (std::log(px) - std::log(xi.mass(x).prob()));
    o.tail += px * std::exp(0.5 * hsum);
  }
  return o;
}

PathPlan exact() {
  PathPlan p;
  p.method = Method::Exact;
  return p;
}

PathPlan mc(std::size_t traj, std::uint64_t seed, unsigned workers = 0) {
  PathPlan p;
  p.method = Method::MonteCarlo;
  p.trajectories = traj;
  p.seed = seed;
  p.workers = workers;
  return p;
}

}  // namespace

TEST(HellingerStep, Values) {
  const std::vector<double> a{0.3, 0.7}, b{1.0, 0.0}, c{0.0, 1.0};
  EXPECT_EQ(hellinger_step(a, a), 0.0);
  EXPECT_NEAR(hellinger_step(b, c), 2.0, 1e-15);
  const double p = 0.81;
  const std::vector<double> xi{p, 1 - p};
  EXPECT_NEAR(hellinger_step(b, xi), std::pow(1 - std::sqrt(p), 2) + (1 - p), 1e-15);
  EXPECT_NEAR(hellinger_step(b, xi), 0.2, 1e-15);
}

TEST(KLExact, SelfIsZero) {
  const auto mu = bernoulli(0.3);
  for (std::size_t n : {1, 5, 10}) EXPECT_NEAR(kl_divergence_exact(*mu, *mu, n).value, 0.0, 1e-15);
}

TEST(KLExact, TwoMemberBound) {
  const auto s = catalog::bernoulli_setup("two-point");
  for (std::size_t n = 1; n <= 12; ++n) {
    const auto r = kl_divergence_exact(*s.mu, *s.xi, n, s.w_mu);
    EXPECT_TRUE(r.holds()) << n;
    EXPECT_LE(r.value, std::log(2.0));
  }
}

TEST(KLExact, LaplaceAgainstBernoulliMatchesEnumeration) {
  const auto mu = bernoulli(0.7);
  const auto xi = laplace_model();
  const auto o = brute_force(*mu, *xi, 8);
  const auto r = kl_divergence_exact(*mu, *xi, 8);
  EXPECT_NEAR(r.value, o.divergence, 1e-12);
  EXPECT_FALSE(r.bound.has_value());
  EXPECT_THROW(kl_divergence_exact(*mu, *xi, 25), BudgetExceeded);
}

TEST(KLExact, NondecreasingAndNonnegative) {
  const auto s = catalog::bernoulli_setup("grid");
  const auto r = kl_divergence_exact(*s.mu, *s.xi, 14);
  EXPECT_GE(r.profile.front(), 0.0);
  for (std::size_t t = 1; t < r.profile.size(); ++t) EXPECT_GE(r.profile[t], r.profile[t - 1] - 1e-15);
}

TEST(TotalHellinger, FourMemberClass) {
  const WeightedClass cls = WeightedClass::uniform({bernoulli(0.2), bernoulli(0.4), bernoulli(0.6), bernoulli(0.8)});
  const auto xi = make_mixture(cls);
  const auto& mu = *cls.members[1];
  const auto r = total_hellinger_check(mu, *xi, 8, exact(), 0.25);
  EXPECT_TRUE(r.holds());
  EXPECT_LE(r.hellinger_sum.mean, std::log(4.0));
  const auto o = brute_force(mu, *xi, 8);
  double h = 0, q = 0;
  for (std::size_t t = 0; t < 8; ++t) {
    h += o.h[t];
    q += o.ratio[t];
  }
  EXPECT_NEAR(r.hellinger_sum.mean, h, 1e-12);
  EXPECT_NEAR(r.ratio_sum.mean, q, 1e-12);
  EXPECT_NEAR(r.divergence.mean, o.divergence, 1e-12);
  for (double v : r.hellinger_series) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 2.0);
  }
}

TEST(TotalHellinger, SelfIsZero) {
  const auto mu = bernoulli(0.6);
  const auto r = total_hellinger_check(*mu, *mu, 9, exact(), 1.0);
  EXPECT_EQ(r.hellinger_sum.mean, 0.0);
  EXPECT_EQ(r.ratio_sum.mean, 0.0);
  EXPECT_EQ(r.divergence.mean, 0.0);
}

TEST(TotalHellinger, DeterministicMixtureChain) {
  const auto cls = catalog::deterministic_classes()[1].cls;
  const MixtureModel xi(cls);
  const auto& mu = *cls.members[3];
  const auto r = total_hellinger_check(mu, xi, 10, exact(), cls.weights[3]);
  EXPECT_TRUE(r.holds());
}

TEST(TotalHellinger, MonteCarloWithinThreeSigma) {
  const auto s = catalog::bernoulli_setup("grid");
  const auto r = total_hellinger_check(*s.mu, *s.xi, 60, mc(2000, 17), s.w_mu);
  EXPECT_EQ(r.method, Method::MonteCarlo);
  EXPECT_TRUE(r.holds());
  EXPECT_GT(r.hellinger_sum.se, 0.0);
}

TEST(TotalHellinger, MonteCarloIndependentOfWorkers) {
  const auto s = catalog::bernoulli_setup("two-point");
  const auto a = evaluate_paths(*s.mu, {s.xi.get()}, 40, mc(700, 5, 1), nullptr, true);
  const auto b = evaluate_paths(*s.mu, {s.xi.get()}, 40, mc(700, 5, 4), nullptr, true);
  EXPECT_EQ(a.step_mean, b.step_mean);
  EXPECT_EQ(a.totals, b.totals);
  EXPECT_EQ(a.tail.mean, b.tail.mean);
}

TEST(TotalHellinger, TypesAgreesWithExact) {
  const auto mu = bernoulli(0.35);
  const auto xi = laplace_model();
  PathPlan types;
  types.method = Method::Types;
  const auto a = evaluate_paths(*mu, {xi.get()}, 16, types);
  const auto b = evaluate_paths(*mu, {xi.get()}, 16, exact());
  for (std::size_t s : {kHellinger, kRatio, kKL})
    for (std::size_t t = 0; t < 16; ++t) EXPECT_NEAR(a.step_mean[s][t], b.step_mean[s][t], 1e-13);
}

TEST(AutoPlan, SwitchesOnSize) {
  const auto s = catalog::bernoulli_setup("two-point");
  PathPlan p;
  EXPECT_EQ(evaluate_paths(*s.mu, {s.xi.get()}, 20, p).method, Method::Exact);
  EXPECT_EQ(evaluate_paths(*s.mu, {s.xi.get()}, 21, p).method, Method::Types);
  p.trajectories = 100;
  EXPECT_EQ(evaluate_paths(*s.mu, {s.xi.get()}, 21, p, nullptr, true).method, Method::MonteCarlo);
}

TEST(ExpTail, SelfAndSingleton) {
  const auto mu = bernoulli(0.4);
  const auto r = exp_tail_check(*mu, *mu, 10, exact(), 1.0);
  EXPECT_NEAR(r.estimate.mean, 1.0, 1e-14);
  EXPECT_EQ(r.bound, 1.0);
  EXPECT_TRUE(r.holds());
}

TEST(ExpTail, TwoMemberAgainstEnumeration) {
  const auto s = catalog::bernoulli_setup("two-point");
  const auto r = exp_tail_check(*s.mu, *s.xi, 10, exact(), s.w_mu);
  const auto o = brute_force(*s.mu, *s.xi, 10);
  EXPECT_NEAR(r.estimate.mean, o.tail, 1e-12);
  EXPECT_LE(r.estimate.mean, std::sqrt(2.0));
  EXPECT_TRUE(r.holds());
  PathPlan types;
  types.method = Method::Types;
  EXPECT_THROW(exp_tail_check(*s.mu, *s.xi, 10, types, s.w_mu), DomainError);
}

TEST(Fisher, Values) {
  EXPECT_EQ(bernoulli_fisher(0.5).value, 4.0);
  EXPECT_NEAR(bernoulli_fisher(0.1).value, 100.0 / 9.0, 1e-12);
  EXPECT_THROW(bernoulli_fisher(0.0), DomainError);
  EXPECT_THROW(bernoulli_fisher(1.0), DomainError);
  for (int i = 1; i <= 9; ++i) {
    const double th = i / 10.0;
    EXPECT_NEAR(bernoulli_fisher(th).value, bernoulli_fisher(1 - th).value, 1e-12);
    // -E[d^2/dt^2 ln p(x|t)] at n = 1 by central differences.
    auto expected_loglik = [th](double t) { return th * std::log(t) + (1 - th) * std::log(1 - t); };
    const double e = 1e-4;
    const double second = (expected_loglik(th + e) - 2 * expected_loglik(th) + expected_loglik(th - e)) / (e * e);
    EXPECT_NEAR(-second / bernoulli_fisher(th).value, 1.0, 1e-6);
  }
}

TEST(ContinuousProfile, SlopeNearHalf) {
  std::vector<std::size_t> ns;
  for (std::size_t n = 64; n <= 4096; n *= 2) ns.push_back(n);
  const auto p = continuous_Dn_profile(0.5, ParameterPrior::uniform(), ns);
  EXPECT_EQ(p.method, Method::Types);
  EXPECT_GE(p.slope, 0.4);
  EXPECT_LE(p.slope, 0.6);
  // The offset settles: residuals against the asymptote vary little.
  EXPECT_LT(p.residual_spread, 0.05);
}

TEST(ContinuousProfile, PointPriorIsZero) {
  const auto p = continuous_Dn_profile(0.3, ParameterPrior::point_mass(0.3), {8, 64, 512});
  for (const auto& r : p.rows) EXPECT_NEAR(r.divergence, 0.0, 1e-14);
}

TEST(Instantaneous, SelfIsZero) {
  const auto mu = bernoulli(0.4);
  const auto r = iid_instantaneous_check(0.4, *mu, 0.0, 50);
  for (const auto& row : r.rows) EXPECT_NEAR(row.scaled, 0.0, 1e-13);
}

TEST(Instantaneous, UniformPriorBounded) {
  const auto r = iid_instantaneous_check(0.5, ParameterPrior::uniform(), 2000);
  EXPECT_TRUE(r.bounded());
  EXPECT_GT(r.peak, 0.0);
  EXPECT_LT(r.peak, 0.5);
  // Small-n values agree with brute force.
  const auto o = brute_force(*bernoulli(0.5), *laplace_model(), 14);
  for (std::size_t t = 0; t < 14; ++t) EXPECT_NEAR(r.rows[t].hellinger, o.h[t], 1e-12);
}

TEST(Instantaneous, UniversalGridWithinLogWeight) {
  // The simple parameter 1/2 (7 bits) and 3/7 (13 bits) on the same grid.
  for (const double theta : {0.5, 3.0 / 7.0}) {
    const auto s = catalog::bernoulli_setup("universal-grid", theta);
    const double lw = -std::log(s.w_mu);
    const auto r = iid_instantaneous_check(s.theta, *s.xi, lw, 400);
    EXPECT_TRUE(r.bounded()) << theta;
    EXPECT_LE(r.peak, lw) << theta;
    double total = 0.0;
    for (const auto& row : r.rows) total += row.hellinger;
    EXPECT_LE(total, lw) << theta;
  }
  EXPECT_LT(-std::log(catalog::bernoulli_setup("universal-grid", 0.5).w_mu),
            -std::log(catalog::bernoulli_setup("universal-grid", 3.0 / 7.0).w_mu));
}

TEST(McExpectation, Basics) {
  const auto mu = bernoulli(0.3);
  const auto c = mc_expectation(*mu, [](SeqView) { return 1.0; }, 100, 3, 1);
  EXPECT_EQ(c.mean, 1.0);
  EXPECT_EQ(c.se, 0.0);
  const auto e = mc_expectation(*mu, [](SeqView x) { return x[0] == 1 ? 1.0 : 0.0; }, 10000, 1, 9);
  EXPECT_LE(std::abs(e.mean - 0.3), 3.0 * e.se);
  const auto e2 = mc_expectation(*mu, [](SeqView x) { return x[0] == 1 ? 1.0 : 0.0; }, 20000, 1, 9);
  const double ratio = (e2.se * e2.se) / (e.se * e.se);
  EXPECT_GT(ratio, 0.4);
  EXPECT_LT(ratio, 0.6);
  EXPECT_THROW(mc_expectation(*mu, [](SeqView) { return 0.0; }, 1, 1, 1), DomainError);
  const auto w1 = mc_expectation(*mu, [](SeqView x) { return static_cast<double>(x[0] + x[1]); }, 500, 2, 4, 1);
  const auto w4 = mc_expectation(*mu, [](SeqView x) { return static_cast<double>(x[0] + x[1]); }, 500, 2, 4, 4);
  EXPECT_EQ(w1.mean, w4.mean);
  EXPECT_EQ(w1.se, w4.se);
}
