#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "unipred/catalog.hpp"
#include "unipred/mixture.hpp"

using namespace unipred;

namespace {

WeightedClass bernoulli_grid(std::size_t points) {
  std::vector<ModelPtr> m;
  for (std::size_t i = 0; i < points; ++i) m.push_back(bernoulli(static_cast<double>(i) / (points - 1)));
  return WeightedClass::uniform(std::move(m));
}

WeightedClass constants() {
  return WeightedClass::uniform({DeterministicEnv::constant(0), DeterministicEnv::constant(1)});
}

}  // namespace

TEST(WeightedClass, Validation) {
  EXPECT_THROW(WeightedClass({bernoulli(0.5)}, {0.0}), DomainError);
  EXPECT_THROW(WeightedClass({bernoulli(0.5), bernoulli(0.2)}, {0.7, 0.7}), DomainError);
  EXPECT_THROW(WeightedClass({bernoulli(0.5)}, {0.9}, 0.2), DomainError);
  EXPECT_NO_THROW(WeightedClass({bernoulli(0.5)}, {0.8}, 0.2));
  EXPECT_THROW(WeightedClass({}, {}), DomainError);
}

TEST(MixtureMass, OneSurvivor) { EXPECT_DOUBLE_EQ(mixture_mass(constants(), parse_seq("1")).prob(), 0.5); }

TEST(MixtureMass, SingletonIsIdentity) {
  const auto nu = bernoulli(0.3);
  const WeightedClass cls({nu}, {1.0});
  for (const char* s : {"", "0", "1101", "000111"}) {
    const Seq x = parse_seq(s);
    EXPECT_NEAR(mixture_mass(cls, x).log(), nu->mass(x).log(), 1e-14);
  }
}

TEST(MixtureMass, GridMatchesDirectSum) {
  const auto cls = bernoulli_grid(21);
  double direct = 0.0;
  for (int i = 0; i <= 20; ++i) direct += std::pow(i / 20.0, 10) / 21.0;
  EXPECT_NEAR(mixture_mass(cls, repeat(1, 10)).prob() / direct, 1.0, 1e-12);
  // The count-based and generic mixtures agree.
  const MixtureModel generic(cls);
  const auto fast = make_mixture(cls);
  const Seq x = parse_seq("1101110");
  EXPECT_NEAR(generic.mass(x).log(), fast->mass(x).log(), 1e-12);
}

TEST(MixtureMass, MixtureOfMeasuresIsAMeasure) {
  const auto m = make_mixture(bernoulli_grid(5));
  EXPECT_TRUE(m->is_measure());
  EXPECT_TRUE(semimeasure_audit(*m, 6).passes());
  const MixtureModel dm(catalog::deterministic_classes()[1].cls);
  EXPECT_TRUE(semimeasure_audit(dm, 6).passes());
}

TEST(Posterior, Elimination) {
  const WeightedClass cls = WeightedClass::uniform({DeterministicEnv::periodic(parse_seq("01")), DeterministicEnv::constant(0)});
  const auto s = posterior_weights(cls, parse_seq("01"));
  EXPECT_EQ(s.weights[0], 1.0);
  EXPECT_EQ(s.weights[1], 0.0);
}

TEST(Posterior, EmptyEqualsPrior) {
  const WeightedClass cls({bernoulli(0.2), bernoulli(0.6)}, {0.25, 0.75});
  const auto s = posterior_weights(cls, {});
  EXPECT_NEAR(s.weights[0], 0.25, 1e-15);
  EXPECT_NEAR(s.weights[1], 0.75, 1e-15);
}

TEST(Posterior, GridConcentratesOnOne) {
  const auto cls = bernoulli_grid(21);
  const auto s = posterior_weights(cls, repeat(1, 20));
  // Oracle: theta^20 normalized over the grid.
  double z = 0.0;
  for (int i = 0; i <= 20; ++i) z += std::pow(i / 20.0, 20);
  EXPECT_NEAR(s.weights[20], 1.0 / z, 1e-12);
  EXPECT_NEAR(s.weights[20], 0.6516586, 1e-6);
  EXPECT_NEAR(s.sum(), 1.0, 1e-12);
  EXPECT_GT(posterior_weights(cls, repeat(1, 50)).weights[20], 0.9);
}

TEST(Posterior, ZeroEvidenceIsExactlyZero) {
  const auto s = posterior_weights(bernoulli_grid(3), parse_seq("10"));
  EXPECT_EQ(s.weights[0], 0.0);
  EXPECT_EQ(s.weights[2], 0.0);
  EXPECT_EQ(s.weights[1], 1.0);
}

TEST(Posterior, StepMatchesBatch) {
  const WeightedClass cls({bernoulli(0.2), bernoulli(0.5), bernoulli(0.9)}, {0.2, 0.3, 0.5});
  std::mt19937_64 rng(3);
  Seq x;
  auto s = posterior_weights(cls, x);
  for (int t = 0; t < 60; ++t) {
    const Symbol a = static_cast<Symbol>(rng() & 1U);
    s = posterior_step(cls, s, a);
    x.push_back(a);
    const auto b = posterior_weights(cls, x);
    for (std::size_t i = 0; i < cls.size(); ++i) ASSERT_NEAR(s.weights[i], b.weights[i], 1e-12);
  }
}

TEST(Posterior, NullConditioning) { EXPECT_THROW(posterior_weights(constants(), parse_seq("01")), ConditioningOnNull); }

TEST(Dominance, SumDominatesTerms) {
  const auto cls = bernoulli_grid(11);
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Seq x(50);
    for (auto& a : x) a = static_cast<Symbol>(rng() & 1U);
    for (std::size_t i = 0; i < cls.size(); ++i) EXPECT_TRUE(dominance_check(cls, i, x).holds());
  }
  // theta = 0.5 member on a random string: slack is ln of the posterior inverse.
  Seq x(50);
  for (auto& a : x) a = static_cast<Symbol>(rng() & 1U);
  const auto r = dominance_check(cls, 5, x);
  EXPECT_GE(r.log_slack, 0.0);
  EXPECT_NEAR(r.log_slack, -std::log(posterior_weights(cls, x).weights[5]), 1e-10);
}

TEST(Dominance, SingletonHasZeroSlack) {
  const WeightedClass cls({bernoulli(0.4)}, {1.0});
  EXPECT_EQ(dominance_check(cls, 0, parse_seq("0110")).log_slack, 0.0);
}

TEST(DetConvergence, TwoConstants) {
  const auto r = det_convergence_report(constants(), repeat(1, 100));
  EXPECT_TRUE(r.holds());
  EXPECT_NEAR(r.bound, std::log(2.0), 1e-15);
  // Only the first step is uncertain: 1 - 1/2.
  EXPECT_NEAR(r.cumulative.back(), 0.5, 1e-15);
}

TEST(DetConvergence, SingletonHasZeroTerms) {
  const WeightedClass cls({DeterministicEnv::periodic(parse_seq("011"))}, {1.0});
  const auto r = det_convergence_report(cls, DeterministicEnv::periodic(parse_seq("011"))->prefix(30));
  for (double t : r.terms) EXPECT_EQ(t, 0.0);
}

TEST(DetConvergence, SharedPrefixThenDiverge) {
  const Seq common = parse_seq("0110100110");
  const WeightedClass cls({DeterministicEnv::prefixed(common, parse_seq("0")), DeterministicEnv::prefixed(common, parse_seq("1")),
                           DeterministicEnv::prefixed(common, parse_seq("01"))},
                          {0.2, 0.3, 0.5});
  const auto alpha = static_cast<const DeterministicEnv&>(*cls.members[1]).prefix(40);
  const auto r = det_convergence_report(cls, alpha);
  // Oracle: first ten terms are 0; step 11 gives 1 - 0.3/(0.3+0.2+...) with
  // members 0 and 2 both emitting 0; after that only member 1 survives.
  for (int t = 0; t < 10; ++t) EXPECT_EQ(r.terms[t], 0.0);
  EXPECT_NEAR(r.terms[10], 1.0 - 0.3, 1e-15);
  EXPECT_NEAR(r.cumulative.back(), 0.7, 1e-15);
  EXPECT_TRUE(r.holds());
  EXPECT_NEAR(r.bound, -std::log(0.3), 1e-15);
}

TEST(DetConvergence, MissingEnvironment) {
  EXPECT_THROW(det_convergence_report(constants(), parse_seq("01")), MissingTrueEnv);
}

TEST(DetConvergence, ShippedClassesHoldForAllMembers) {
  for (const auto& [name, cls] : catalog::deterministic_classes())
    for (const auto& m : cls.members) {
      const auto alpha = static_cast<const DeterministicEnv&>(*m).prefix(500);
      const auto r = det_convergence_report(cls, alpha);
      EXPECT_TRUE(r.holds()) << name << " " << m->name();
      EXPECT_GE(r.slack, -1e-10);
    }
}
