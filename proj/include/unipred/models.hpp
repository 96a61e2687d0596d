#pragma once

// Elementary environments: i.i.d. categorical sources, deterministic
// sequences, and the count-based model interface shared by every
// exchangeable predictor.

#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "unipred/core.hpp"

namespace unipred {

/// Sufficient statistics (n_0, ..., n_{d-1}) of an i.i.d. sample.
struct CountVector {
  std::vector<std::uint64_t> counts;

  CountVector() : counts(2, 0) {}
  explicit CountVector(std::size_t d) : counts(d, 0) {}
  CountVector(std::initializer_list<std::uint64_t> c) : counts(c) {}

  static CountVector binary(std::uint64_t n0, std::uint64_t n1) { return CountVector{n0, n1}; }
  static CountVector of(SeqView x, std::size_t d) {
    CountVector c(d);
    for (Symbol a : x) {
      if (a >= d) throw DomainError("symbol outside alphabet");
      ++c.counts[a];
    }
    return c;
  }

  std::size_t size() const { return counts.size(); }
  std::uint64_t total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }
  std::uint64_t operator[](std::size_t a) const { return counts[a]; }
  std::uint64_t& operator[](std::size_t a) { return counts[a]; }

  friend bool operator==(const CountVector&, const CountVector&) = default;
};

/// A semimeasure whose mass depends on the data only through symbol counts.
/// Count-based models support exact expectations by summing over type
/// classes instead of sequences.
class CountModel : public Semimeasure {
 public:
  virtual LogMass mass_of_counts(const CountVector& c) const = 0;

  LogMass mass(SeqView x) const override { return mass_of_counts(CountVector::of(x, alphabet().size)); }

  /// rho(a | counts).
  virtual LogMass predictive_of_counts(const CountVector& c, Symbol a) const {
    const LogMass denom = mass_of_counts(c);
    if (denom.is_zero()) throw ConditioningOnNull("predictive conditioned on a zero-mass string");
    CountVector next = c;
    ++next[a];
    return mass_of_counts(next) / denom;
  }

  LogMass predictive(SeqView x, Symbol a) const override {
    if (!alphabet().contains(a)) throw DomainError("symbol outside alphabet");
    return predictive_of_counts(CountVector::of(x, alphabet().size), a);
  }

  std::unique_ptr<Tracker> track() const override;
};

namespace detail {

class CountTracker final : public Tracker {
 public:
  explicit CountTracker(const CountModel& model)
      : model_(&model), counts_(model.alphabet().size), mass_(model.mass_of_counts(counts_)) {}

  std::unique_ptr<Tracker> clone() const override { return std::make_unique<CountTracker>(*this); }
  LogMass mass() const override { return mass_; }
  void predictive(std::span<LogMass> out) const override {
    for (std::size_t a = 0; a < counts_.size(); ++a)
      out[a] = mass_.is_zero() ? LogMass::zero() : model_->predictive_of_counts(counts_, static_cast<Symbol>(a));
  }
  void push(Symbol a) override {
    ++counts_[a];
    mass_ = model_->mass_of_counts(counts_);
  }

 private:
  const CountModel* model_;
  CountVector counts_;
  LogMass mass_;
};

}  // namespace detail

inline std::unique_ptr<Tracker> CountModel::track() const { return std::make_unique<detail::CountTracker>(*this); }

/// x log p with the convention 0 log 0 = 0.
inline double xlogy(double x, double p) {
  if (x == 0.0) return 0.0;
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  return x * std::log(p);
}

/// i.i.d. source with fixed symbol probabilities.
class Categorical final : public CountModel {
 public:
  explicit Categorical(std::vector<double> probs) : probs_(std::move(probs)), alphabet_(probs_.size()) {
    double total = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0 && p <= 1.0)) throw DomainError("categorical probability outside [0,1]");
      total += p;
    }
    if (std::abs(total - 1.0) > kMeasureTolerance) throw DomainError("categorical probabilities must sum to 1");
  }

  Alphabet alphabet() const override { return alphabet_; }
  bool is_measure() const override { return true; }
  std::string name() const override {
    std::string s = "iid(";
    for (std::size_t a = 0; a < probs_.size(); ++a) s += (a ? "," : "") + std::to_string(probs_[a]);
    return s + ")";
  }

  LogMass mass_of_counts(const CountVector& c) const override {
    double lm = 0.0;
    for (std::size_t a = 0; a < probs_.size(); ++a) lm += xlogy(static_cast<double>(c[a]), probs_[a]);
    return LogMass::from_log(lm);
  }
  LogMass predictive_of_counts(const CountVector& c, Symbol a) const override {
    if (mass_of_counts(c).is_zero()) throw ConditioningOnNull("predictive conditioned on a zero-mass string");
    return LogMass::from_prob(probs_[a]);
  }

  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> probs_;
  Alphabet alphabet_;
};

inline std::shared_ptr<Categorical> bernoulli(double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw DomainError("Bernoulli parameter outside [0,1]");
  return std::make_shared<Categorical>(std::vector<double>{1.0 - theta, theta});
}

/// The deterministic measure concentrated on one infinite sequence alpha.
class DeterministicEnv final : public Semimeasure {
 public:
  using Generator = std::function<Symbol(std::size_t)>;

  DeterministicEnv(Generator alpha, std::size_t d, std::string label)
      : alpha_(std::move(alpha)), alphabet_(d), label_(std::move(label)) {}

  /// alpha = a a a ...
  static std::shared_ptr<DeterministicEnv> constant(Symbol a, std::size_t d = 2) {
    return std::make_shared<DeterministicEnv>([a](std::size_t) { return a; }, d,
                                              "const(" + std::to_string(a) + ")");
  }
  /// alpha = pattern repeated forever.
  static std::shared_ptr<DeterministicEnv> periodic(Seq pattern, std::size_t d = 2) {
    if (pattern.empty()) throw DomainError("empty period");
    const std::string label = "periodic(" + to_string(pattern) + ")";
    return std::make_shared<DeterministicEnv>(
        [p = std::move(pattern)](std::size_t t) { return p[t % p.size()]; }, d, label);
  }
  /// alpha = prefix followed by `tail` repeated forever.
  static std::shared_ptr<DeterministicEnv> prefixed(Seq prefix, Seq tail, std::size_t d = 2) {
    if (tail.empty()) throw DomainError("empty tail");
    const std::string label = "prefixed(" + to_string(prefix) + "," + to_string(tail) + ")";
    return std::make_shared<DeterministicEnv>(
        [p = std::move(prefix), q = std::move(tail)](std::size_t t) {
          return t < p.size() ? p[t] : q[(t - p.size()) % q.size()];
        },
        d, label);
  }

  Symbol at(std::size_t t) const { return alpha_(t); }
  Seq prefix(std::size_t n) const {
    Seq x(n);
    for (std::size_t t = 0; t < n; ++t) x[t] = at(t);
    return x;
  }

  Alphabet alphabet() const override { return alphabet_; }
  bool is_measure() const override { return true; }
  std::string name() const override { return label_; }
  LogMass mass(SeqView x) const override {
    for (std::size_t t = 0; t < x.size(); ++t)
      if (x[t] != at(t)) return LogMass::zero();
    return LogMass::one();
  }
  std::unique_ptr<Tracker> track() const override;

 private:
  Generator alpha_;
  Alphabet alphabet_;
  std::string label_;
};

namespace detail {

class DeterministicTracker final : public Tracker {
 public:
  explicit DeterministicTracker(const DeterministicEnv& env) : env_(&env) {}
  std::unique_ptr<Tracker> clone() const override { return std::make_unique<DeterministicTracker>(*this); }
  LogMass mass() const override { return alive_ ? LogMass::one() : LogMass::zero(); }
  void predictive(std::span<LogMass> out) const override {
    std::fill(out.begin(), out.end(), LogMass::zero());
    if (alive_) out[env_->at(t_)] = LogMass::one();
  }
  void push(Symbol a) override {
    if (alive_ && a != env_->at(t_)) alive_ = false;
    ++t_;
  }

 private:
  const DeterministicEnv* env_;
  std::size_t t_ = 0;
  bool alive_ = true;
};

}  // namespace detail

inline std::unique_ptr<Tracker> DeterministicEnv::track() const {
  return std::make_unique<detail::DeterministicTracker>(*this);
}

/// Predictive vector of a tracker as plain probabilities.
inline std::vector<double> predictive_probs(const Tracker& tr, std::size_t d) {
  std::vector<LogMass> lm(d);
  tr.predictive(lm);
  std::vector<double> p(d);
  for (std::size_t a = 0; a < d; ++a) p[a] = lm[a].prob();
  return p;
}

}  // namespace unipred
