#pragma once

// Alphabets, sequences, log-domain probability mass and the semimeasure
// abstraction shared by every predictor in the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "unipred/errors.hpp"

namespace unipred {

using Symbol = std::uint32_t;
using Seq = std::vector<Symbol>;
using SeqView = std::span<const Symbol>;

/// Tolerance used by every "is this a measure" check.
inline constexpr double kMeasureTolerance = 1e-10;

struct Alphabet {
  std::size_t size = 2;

  explicit Alphabet(std::size_t d = 2) : size(d) {
    if (d < 2) throw DomainError("alphabet needs at least two symbols");
  }
  bool contains(Symbol a) const { return a < size; }
  friend bool operator==(const Alphabet&, const Alphabet&) = default;
};

inline Seq repeat(Symbol a, std::size_t n) { return Seq(n, a); }

/// Parse "0110" style strings into a sequence (digits only).
inline Seq parse_seq(std::string_view s) {
  Seq out;
  out.reserve(s.size());
  for (char c : s) {
    if (c < '0' || c > '9') throw DomainError("bad symbol character in sequence");
    out.push_back(static_cast<Symbol>(c - '0'));
  }
  return out;
}

inline std::string to_string(SeqView x) {
  std::string s;
  s.reserve(x.size());
  for (Symbol a : x) s.push_back(static_cast<char>('0' + a));
  return s;
}

/// Probability mass carried as its natural logarithm. -inf is mass zero.
class LogMass {
 public:
  constexpr LogMass() = default;

  static constexpr LogMass from_log(double v) { return LogMass(v); }
  static LogMass from_prob(double p) {
    if (p < 0.0) throw DomainError("negative probability");
    return LogMass(p == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(p));
  }
  static constexpr LogMass zero() { return LogMass(-std::numeric_limits<double>::infinity()); }
  static constexpr LogMass one() { return LogMass(0.0); }

  constexpr double log() const { return value_; }
  double prob() const { return std::exp(value_); }
  bool is_zero() const { return value_ == -std::numeric_limits<double>::infinity(); }

  /// Product of masses.
  friend LogMass operator*(LogMass a, LogMass b) {
    if (a.is_zero() || b.is_zero()) return zero();
    return LogMass(a.value_ + b.value_);
  }
  /// Ratio of masses; the denominator must be nonzero.
  friend LogMass operator/(LogMass a, LogMass b) {
    if (b.is_zero()) throw ConditioningOnNull("division by zero mass");
    if (a.is_zero()) return zero();
    return LogMass(a.value_ - b.value_);
  }
  /// Sum of masses (log-sum-exp).
  friend LogMass operator+(LogMass a, LogMass b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    const double hi = std::max(a.value_, b.value_);
    const double lo = std::min(a.value_, b.value_);
    return LogMass(hi + std::log1p(std::exp(lo - hi)));
  }
  LogMass& operator+=(LogMass b) { return *this = *this + b; }
  LogMass& operator*=(LogMass b) { return *this = *this * b; }

  friend bool operator<(LogMass a, LogMass b) { return a.value_ < b.value_; }
  friend bool operator<=(LogMass a, LogMass b) { return a.value_ <= b.value_; }
  friend bool operator>(LogMass a, LogMass b) { return a.value_ > b.value_; }
  friend bool operator>=(LogMass a, LogMass b) { return a.value_ >= b.value_; }
  friend bool operator==(LogMass a, LogMass b) { return a.value_ == b.value_; }

 private:
  constexpr explicit LogMass(double v) : value_(v) {}
  double value_ = -std::numeric_limits<double>::infinity();
};

inline LogMass log_sum(std::span<const LogMass> xs) {
  double hi = -std::numeric_limits<double>::infinity();
  for (auto x : xs) hi = std::max(hi, x.log());
  if (hi == -std::numeric_limits<double>::infinity()) return LogMass::zero();
  double acc = 0.0;
  for (auto x : xs) acc += std::exp(x.log() - hi);
  return LogMass::from_log(hi + std::log(acc));
}

/// Sequential evaluation state of a model after observing some history.
class Tracker {
 public:
  virtual ~Tracker() = default;
  virtual std::unique_ptr<Tracker> clone() const = 0;
  /// rho(history)
  virtual LogMass mass() const = 0;
  /// rho(a | history) for every symbol a.
  virtual void predictive(std::span<LogMass> out) const = 0;
  virtual void push(Symbol a) = 0;
};

/// An environment rho assigning mass to finite strings with
/// rho(x) >= sum_a rho(xa). Measures additionally satisfy equality and
/// rho(empty) = 1.
class Semimeasure {
 public:
  virtual ~Semimeasure() = default;

  virtual Alphabet alphabet() const = 0;
  virtual LogMass mass(SeqView x) const = 0;
  virtual bool is_measure() const { return false; }
  virtual std::string name() const { return "semimeasure"; }

  /// rho(a|x) = rho(xa)/rho(x). Throws ConditioningOnNull when rho(x) = 0.
  virtual LogMass predictive(SeqView x, Symbol a) const {
    const LogMass denom = mass(x);
    if (denom.is_zero()) throw ConditioningOnNull("predictive conditioned on a zero-mass string");
    Seq xa(x.begin(), x.end());
    xa.push_back(a);
    return mass(xa) / denom;
  }

  /// Incremental evaluator. The default replays `predictive` on a growing buffer.
  virtual std::unique_ptr<Tracker> track() const;
};

using ModelPtr = std::shared_ptr<const Semimeasure>;

namespace detail {

class ReplayTracker final : public Tracker {
 public:
  explicit ReplayTracker(const Semimeasure& model) : model_(&model), mass_(model.mass({})) {}

  std::unique_ptr<Tracker> clone() const override { return std::make_unique<ReplayTracker>(*this); }
  LogMass mass() const override { return mass_; }
  void predictive(std::span<LogMass> out) const override {
    const std::size_t d = model_->alphabet().size;
    Seq xa = history_;
    xa.push_back(0);
    for (std::size_t a = 0; a < d; ++a) {
      xa.back() = static_cast<Symbol>(a);
      out[a] = mass_.is_zero() ? LogMass::zero() : model_->mass(xa) / mass_;
    }
  }
  void push(Symbol a) override {
    history_.push_back(a);
    mass_ = model_->mass(history_);
  }

 private:
  const Semimeasure* model_;
  Seq history_;
  LogMass mass_;
};

}  // namespace detail

inline std::unique_ptr<Tracker> Semimeasure::track() const {
  return std::make_unique<detail::ReplayTracker>(*this);
}

/// rho(a|x) in log domain; the free-function form used by callers that only
/// hold the model interface.
inline LogMass predictive_from_mass(const Semimeasure& model, SeqView x, Symbol a) {
  if (!model.alphabet().contains(a)) throw DomainError("symbol outside alphabet");
  const LogMass denom = model.mass(x);
  if (denom.is_zero()) throw ConditioningOnNull("predictive conditioned on a zero-mass string");
  Seq xa(x.begin(), x.end());
  xa.push_back(a);
  return model.mass(xa) / denom;
}

struct AuditReport {
  std::size_t depth = 0;
  std::size_t nodes_checked = 0;
  LogMass empty_mass;
  /// max over audited x of sum_a rho(xa) - rho(x), in linear scale. <= 0 means no violation.
  double max_violation = -std::numeric_limits<double>::infinity();
  /// min over audited x of rho(x) - sum_a rho(xa): the semimeasure slack.
  double min_slack = std::numeric_limits<double>::infinity();
  Seq worst;

  bool passes(double tol = kMeasureTolerance) const {
    return max_violation <= tol && empty_mass.prob() <= 1.0 + tol;
  }
};

/// Exhaustively checks rho(x) >= sum_a rho(xa) for every x with length < depth.
inline AuditReport semimeasure_audit(const Semimeasure& model, std::size_t depth,
                                     std::size_t node_cap = std::size_t{1} << 22) {
  const std::size_t d = model.alphabet().size;
  double total = 0.0;
  double layer = 1.0;
  for (std::size_t k = 0; k <= depth; ++k) {
    total += layer;
    layer *= static_cast<double>(d);
  }
  if (total > static_cast<double>(node_cap)) throw BudgetExceeded("semimeasure audit exceeds node cap");

  AuditReport report;
  report.depth = depth;
  report.empty_mass = model.mass({});

  Seq x;
  // Iterative DFS over all strings of length < depth.
  auto visit = [&](auto&& self, LogMass mx) -> void {
    if (x.size() >= depth) return;
    std::vector<LogMass> child(d);
    x.push_back(0);
    for (std::size_t a = 0; a < d; ++a) {
      x.back() = static_cast<Symbol>(a);
      child[a] = model.mass(x);
    }
    x.pop_back();
    const double parent = mx.prob();
    double sum = 0.0;
    for (auto c : child) sum += c.prob();
    const double violation = sum - parent;
    ++report.nodes_checked;
    if (violation > report.max_violation) {
      report.max_violation = violation;
      report.worst = x;
    }
    report.min_slack = std::min(report.min_slack, -violation);
    x.push_back(0);
    for (std::size_t a = 0; a < d; ++a) {
      x.back() = static_cast<Symbol>(a);
      if (!child[a].is_zero()) self(self, child[a]);
    }
    x.pop_back();
  };
  visit(visit, report.empty_mass);
  if (report.nodes_checked == 0) {
    report.max_violation = 0.0;
    report.min_slack = 0.0;
  }
  return report;
}

/// splitmix64: derives independent stream seeds from (master, index).
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Uniform double in [0,1) from the top 53 bits of a 64-bit engine draw.
template <class Engine>
double uniform01(Engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Draws a symbol from a predictive distribution; the last symbol with
/// positive mass absorbs rounding.
template <class Engine>
Symbol draw_symbol(std::span<const LogMass> pred, Engine& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t a = 0; a < pred.size(); ++a) {
    const double p = pred[a].prob();
    if (p <= 0.0) continue;
    last = a;
    acc += p;
    if (u < acc) return static_cast<Symbol>(a);
  }
  return static_cast<Symbol>(last);
}

/// Draws x_{1:n} from a measure, one predictive at a time. Throws
/// NotAMeasure if some predictive sums below 1 - tol.
inline Seq sample_sequence(const Semimeasure& model, std::size_t n, std::uint64_t seed,
                           double tol = kMeasureTolerance) {
  const std::size_t d = model.alphabet().size;
  std::mt19937_64 rng(mix_seed(seed, 0));
  auto tracker = model.track();
  std::vector<LogMass> pred(d);
  Seq x;
  x.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    tracker->predictive(pred);
    double total = 0.0;
    for (auto p : pred) total += p.prob();
    if (total < 1.0 - tol) throw NotAMeasure("predictive mass sums to " + std::to_string(total));
    const Symbol a = draw_symbol(std::span<const LogMass>(pred), rng);
    x.push_back(a);
    tracker->push(a);
  }
  return x;
}

}  // namespace unipred
