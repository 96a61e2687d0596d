#pragma once

// Bayes mixtures over finite model classes: mixture mass, posterior weights,
// dominance and the deterministic-environment convergence ledger.

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "unipred/core.hpp"
#include "unipred/models.hpp"

namespace unipred {

/// A finite truncation of a countable model class with prior weights.
/// `tail_mass` is prior mass assigned to members that are not materialized.
struct WeightedClass {
  std::vector<ModelPtr> members;
  std::vector<double> weights;
  double tail_mass = 0.0;

  WeightedClass() = default;
  WeightedClass(std::vector<ModelPtr> m, std::vector<double> w, double tail = 0.0)
      : members(std::move(m)), weights(std::move(w)), tail_mass(tail) {
    validate();
  }

  /// Equal weights summing to 1 - tail.
  static WeightedClass uniform(std::vector<ModelPtr> m, double tail = 0.0) {
    const double w = (1.0 - tail) / static_cast<double>(m.size());
    std::vector<double> ws(m.size(), w);
    return WeightedClass(std::move(m), std::move(ws), tail);
  }

  void validate() const {
    if (members.empty()) throw DomainError("empty model class");
    if (members.size() != weights.size()) throw DomainError("member and weight counts differ");
    if (!(tail_mass >= 0.0)) throw DomainError("negative tail mass");
    double total = tail_mass;
    for (double w : weights) {
      if (!(w > 0.0)) throw DomainError("prior weights must be strictly positive");
      total += w;
    }
    if (total > 1.0 + kMeasureTolerance) throw DomainError("prior weights sum above 1");
    const Alphabet d = members.front()->alphabet();
    for (const auto& m : members)
      if (m->alphabet() != d) throw DomainError("members disagree on the alphabet");
  }

  std::size_t size() const { return members.size(); }
  Alphabet alphabet() const { return members.front()->alphabet(); }
  double weight_sum() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
  bool all_measures() const {
    for (const auto& m : members)
      if (!m->is_measure()) return false;
    return true;
  }
};

namespace detail {

class MixtureTracker final : public Tracker {
 public:
  explicit MixtureTracker(const WeightedClass& cls) : d_(cls.alphabet().size) {
    for (std::size_t i = 0; i < cls.size(); ++i) {
      trackers_.push_back(cls.members[i]->track());
      logw_.push_back(LogMass::from_prob(cls.weights[i]) * trackers_.back()->mass());
    }
    mass_ = log_sum(logw_);
  }
  MixtureTracker(const MixtureTracker& o) : d_(o.d_), logw_(o.logw_), mass_(o.mass_) {
    for (const auto& t : o.trackers_) trackers_.push_back(t->clone());
  }

  std::unique_ptr<Tracker> clone() const override { return std::make_unique<MixtureTracker>(*this); }
  LogMass mass() const override { return mass_; }

  void predictive(std::span<LogMass> out) const override {
    if (mass_.is_zero()) {
      std::fill(out.begin(), out.end(), LogMass::zero());
      return;
    }
    std::vector<LogMass> acc(d_, LogMass::zero());
    std::vector<LogMass> member(d_);
    for (std::size_t i = 0; i < trackers_.size(); ++i) {
      if (logw_[i].is_zero()) continue;
      trackers_[i]->predictive(member);
      for (std::size_t a = 0; a < d_; ++a) acc[a] += logw_[i] * member[a];
    }
    for (std::size_t a = 0; a < d_; ++a) out[a] = acc[a] / mass_;
  }

  void push(Symbol a) override {
    for (std::size_t i = 0; i < trackers_.size(); ++i) {
      if (logw_[i].is_zero()) continue;
      const LogMass before = trackers_[i]->mass();
      trackers_[i]->push(a);
      logw_[i] = logw_[i] * (trackers_[i]->mass() / before);
    }
    mass_ = log_sum(logw_);
  }

  /// Unnormalized posterior masses w_nu * nu(x).
  const std::vector<LogMass>& joint() const { return logw_; }

 private:
  std::size_t d_;
  std::vector<std::unique_ptr<Tracker>> trackers_;
  std::vector<LogMass> logw_;
  LogMass mass_;
};

}  // namespace detail

/// xi(x) = sum_nu w_nu nu(x).
class MixtureModel : public Semimeasure {
 public:
  explicit MixtureModel(WeightedClass cls, std::string label = "mixture")
      : cls_(std::move(cls)), label_(std::move(label)) {
    cls_.validate();
  }

  const WeightedClass& model_class() const { return cls_; }
  Alphabet alphabet() const override { return cls_.alphabet(); }
  bool is_measure() const override {
    return cls_.all_measures() && std::abs(cls_.weight_sum() - 1.0) <= kMeasureTolerance;
  }
  std::string name() const override { return label_; }

  LogMass mass(SeqView x) const override {
    std::vector<LogMass> terms(cls_.size());
    for (std::size_t i = 0; i < cls_.size(); ++i)
      terms[i] = LogMass::from_prob(cls_.weights[i]) * cls_.members[i]->mass(x);
    return log_sum(terms);
  }

  std::unique_ptr<Tracker> track() const override { return std::make_unique<detail::MixtureTracker>(cls_); }

 private:
  WeightedClass cls_;
  std::string label_;
};

/// Mixture of count-based members; itself count-based.
class CountMixture final : public CountModel {
 public:
  explicit CountMixture(WeightedClass cls, std::string label = "mixture")
      : cls_(std::move(cls)), label_(std::move(label)) {
    cls_.validate();
    for (const auto& m : cls_.members) {
      auto cm = std::dynamic_pointer_cast<const CountModel>(m);
      if (!cm) throw DomainError("count mixture needs count-based members");
      parts_.push_back(std::move(cm));
    }
  }

  const WeightedClass& model_class() const { return cls_; }
  Alphabet alphabet() const override { return cls_.alphabet(); }
  bool is_measure() const override {
    return cls_.all_measures() && std::abs(cls_.weight_sum() - 1.0) <= kMeasureTolerance;
  }
  std::string name() const override { return label_; }

  LogMass mass_of_counts(const CountVector& c) const override {
    std::vector<LogMass> terms(parts_.size());
    for (std::size_t i = 0; i < parts_.size(); ++i)
      terms[i] = LogMass::from_prob(cls_.weights[i]) * parts_[i]->mass_of_counts(c);
    return log_sum(terms);
  }

 private:
  WeightedClass cls_;
  std::string label_;
  std::vector<std::shared_ptr<const CountModel>> parts_;
};

/// Builds the mixture model, choosing the count-based form when possible.
inline ModelPtr make_mixture(const WeightedClass& cls, std::string label = "mixture") {
  bool counts = true;
  for (const auto& m : cls.members)
    if (!std::dynamic_pointer_cast<const CountModel>(m)) counts = false;
  if (counts) return std::make_shared<CountMixture>(cls, std::move(label));
  return std::make_shared<MixtureModel>(cls, std::move(label));
}

inline LogMass mixture_mass(const WeightedClass& cls, SeqView x) { return MixtureModel(cls).mass(x); }

struct PosteriorState {
  Seq x;
  std::vector<double> weights;  // w_nu(x)
  LogMass evidence;             // xi(x)

  double sum() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

/// w_nu(x) = w_nu nu(x) / xi(x). Members with nu(x) = 0 get exactly 0.
inline PosteriorState posterior_weights(const WeightedClass& cls, SeqView x) {
  cls.validate();
  std::vector<LogMass> joint(cls.size());
  for (std::size_t i = 0; i < cls.size(); ++i)
    joint[i] = LogMass::from_prob(cls.weights[i]) * cls.members[i]->mass(x);
  const LogMass xi = log_sum(joint);
  if (xi.is_zero()) throw ConditioningOnNull("posterior conditioned on a zero-mass string");
  PosteriorState s{Seq(x.begin(), x.end()), std::vector<double>(cls.size(), 0.0), xi};
  for (std::size_t i = 0; i < cls.size(); ++i)
    if (!joint[i].is_zero()) s.weights[i] = (joint[i] / xi).prob();
  return s;
}

/// One Bayes update: w_nu(xa) = w_nu(x) nu(a|x) / xi(a|x).
inline PosteriorState posterior_step(const WeightedClass& cls, const PosteriorState& s, Symbol a) {
  std::vector<double> next(cls.size(), 0.0);
  double norm = 0.0;
  for (std::size_t i = 0; i < cls.size(); ++i) {
    if (s.weights[i] == 0.0) continue;
    next[i] = s.weights[i] * cls.members[i]->predictive(s.x, a).prob();
    norm += next[i];
  }
  if (norm == 0.0) throw ConditioningOnNull("posterior conditioned on a zero-mass string");
  for (double& w : next) w /= norm;
  PosteriorState out{s.x, std::move(next), LogMass::zero()};
  out.x.push_back(a);
  out.evidence = mixture_mass(cls, out.x);
  return out;
}

struct DominanceReport {
  LogMass mixture;  // xi(x)
  LogMass term;     // w_nu nu(x)
  double log_slack = 0.0;  // ln xi(x) - ln(w_nu nu(x)); +inf when the term is 0
  bool holds(double tol = 1e-12) const { return log_slack >= -tol; }
};

inline DominanceReport dominance_check(const WeightedClass& cls, std::size_t member, SeqView x) {
  if (member >= cls.size()) throw DomainError("member index out of range");
  DominanceReport r;
  r.mixture = mixture_mass(cls, x);
  r.term = LogMass::from_prob(cls.weights[member]) * cls.members[member]->mass(x);
  r.log_slack = r.term.is_zero() ? std::numeric_limits<double>::infinity() : r.mixture.log() - r.term.log();
  return r;
}

struct DetConvergenceReport {
  std::vector<double> terms;       // 1 - xi(alpha_t | alpha_<t)
  std::vector<double> cumulative;  // running sums
  double w_alpha = 0.0;            // prior mass of members reproducing alpha
  double bound = 0.0;              // ln 1/w_alpha
  double bound_renormalized = 0.0; // same bound for weights rescaled to sum to 1
  double slack = 0.0;              // bound - final cumulative sum
  bool holds(double tol = 1e-10) const {
    for (double c : cumulative)
      if (c > bound + tol) return false;
    return true;
  }
};

/// Per-step deficit of the mixture along alpha. Members reproducing alpha
/// exactly on its whole length define w_alpha.
inline DetConvergenceReport det_convergence_report(const WeightedClass& cls, SeqView alpha) {
  cls.validate();
  DetConvergenceReport r;
  for (std::size_t i = 0; i < cls.size(); ++i) {
    const auto* det = dynamic_cast<const DeterministicEnv*>(cls.members[i].get());
    if (det != nullptr && det->mass(alpha) == LogMass::one()) r.w_alpha += cls.weights[i];
  }
  if (r.w_alpha == 0.0) throw MissingTrueEnv("no deterministic member reproduces the sequence");
  r.bound = -std::log(r.w_alpha);
  r.bound_renormalized = -std::log(r.w_alpha / cls.weight_sum());

  detail::MixtureTracker tr(cls);
  std::vector<LogMass> pred(cls.alphabet().size);
  double total = 0.0;
  r.terms.reserve(alpha.size());
  r.cumulative.reserve(alpha.size());
  for (Symbol a : alpha) {
    tr.predictive(pred);
    const double term = -std::expm1(pred[a].log());
    total += term;
    r.terms.push_back(term);
    r.cumulative.push_back(total);
    tr.push(a);
  }
  r.slack = r.bound - total;
  return r;
}

}  // namespace unipred
