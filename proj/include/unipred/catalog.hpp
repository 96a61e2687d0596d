#pragma once

// Named model classes used by the experiments and checks.

#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "unipred/conjugate.hpp"
#include "unipred/mixture.hpp"
#include "unipred/models.hpp"

namespace unipred::catalog {

struct NamedClass {
  std::string name;
  WeightedClass cls;
};

/// All binary words of length `len`, in lexicographic order.
inline std::vector<Seq> binary_words(std::size_t len) {
  std::vector<Seq> out;
  for (std::uint64_t v = 0; v < (std::uint64_t{1} << len); ++v) {
    Seq w(len);
    for (std::size_t i = 0; i < len; ++i) w[i] = static_cast<Symbol>((v >> (len - 1 - i)) & 1U);
    out.push_back(std::move(w));
  }
  return out;
}

/// Deterministic classes: the two constants; periodic words of period <= 4
/// with weight 4^-p each; a prefix of length <= 3 then a constant tail, with
/// weight 2^-(2k+2) each.
inline std::vector<NamedClass> deterministic_classes() {
  std::vector<NamedClass> out;
  out.push_back({"constants", WeightedClass::uniform({DeterministicEnv::constant(0), DeterministicEnv::constant(1)})});

  std::vector<ModelPtr> members;
  std::vector<double> weights;
  for (std::size_t p = 1; p <= 4; ++p)
    for (auto& w : binary_words(p)) {
      members.push_back(DeterministicEnv::periodic(w));
      weights.push_back(std::ldexp(1.0, -2 * static_cast<int>(p)));
    }
  out.push_back({"periodic", WeightedClass(std::move(members), std::move(weights))});

  members.clear();
  weights.clear();
  for (std::size_t k = 0; k <= 3; ++k)
    for (auto& w : binary_words(k))
      for (Symbol tail : {Symbol{0}, Symbol{1}}) {
        members.push_back(DeterministicEnv::prefixed(w, Seq{tail}));
        weights.push_back(std::ldexp(1.0, -2 * static_cast<int>(k) - 2));
      }
  out.push_back({"prefixed", WeightedClass(std::move(members), std::move(weights))});
  return out;
}

/// Reduced fractions p/q in [0,1] with q <= qmax.
inline std::vector<std::pair<std::uint64_t, std::uint64_t>> rationals(std::uint64_t qmax) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
  for (std::uint64_t q = 1; q <= qmax; ++q)
    for (std::uint64_t p = 0; p <= q; ++p)
      if (std::gcd(p, q) == 1) out.emplace_back(p, q);
  return out;
}

inline GridUniversalPrior universal_grid() { return GridUniversalPrior::stub(rationals(8)); }

/// True environment, Bayes mixture and the true environment's prior weight.
struct BernoulliSetup {
  std::string name;
  double theta = 0.5;
  ModelPtr mu;
  ModelPtr xi;
  double w_mu = 1.0;
};

namespace detail {

inline BernoulliSetup from_class(std::string name, const WeightedClass& cls, const std::vector<double>& thetas,
                                 double theta) {
  for (std::size_t i = 0; i < thetas.size(); ++i)
    if (std::abs(thetas[i] - theta) < 1e-12)
      return {std::move(name), theta, cls.members[i], make_mixture(cls, name), cls.weights[i]};
  throw MissingTrueEnv("theta is not a member of the " + name + " class");
}

}  // namespace detail

inline const std::vector<std::string>& bernoulli_setup_names() {
  static const std::vector<std::string> names{"two-point", "grid", "universal-grid", "self"};
  return names;
}

/// two-point: {0.3, 0.7} at 1/2 each (default theta 0.7).
/// grid: i/10 for i = 1..9, uniform weights (default theta 0.3).
/// universal-grid: rationals with denominator <= 8, weights 2^-K (default 1/2).
/// self: xi = mu (default theta 0.5).
inline BernoulliSetup bernoulli_setup(const std::string& name, std::optional<double> theta = std::nullopt) {
  if (name == "two-point") {
    const std::vector<double> t{0.3, 0.7};
    return detail::from_class(name, WeightedClass::uniform({bernoulli(0.3), bernoulli(0.7)}), t, theta.value_or(0.7));
  }
  if (name == "grid") {
    std::vector<ModelPtr> m;
    std::vector<double> t;
    for (int i = 1; i <= 9; ++i) {
      t.push_back(i / 10.0);
      m.push_back(bernoulli(i / 10.0));
    }
    return detail::from_class(name, WeightedClass::uniform(std::move(m)), t, theta.value_or(0.3));
  }
  if (name == "universal-grid") {
    const auto g = universal_grid();
    std::vector<double> t;
    for (const auto& pt : g.points) t.push_back(pt.theta);
    return detail::from_class(name, g.model_class(), t, theta.value_or(0.5));
  }
  if (name == "self") {
    const double th = theta.value_or(0.5);
    auto mu = bernoulli(th);
    return {name, th, mu, mu, 1.0};
  }
  throw DomainError("unknown model class '" + name + "'");
}

}  // namespace unipred::catalog
