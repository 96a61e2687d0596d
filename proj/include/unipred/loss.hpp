#pragma once

// Loss matrices and the rho-optimal action rule.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "unipred/errors.hpp"

namespace unipred {

/// l(x, y) in [0,1] for observation x and action y.
class LossMatrix {
 public:
  LossMatrix(std::size_t observations, std::size_t actions, std::vector<double> entries, std::string label = "custom")
      : obs_(observations), acts_(actions), l_(std::move(entries)), label_(std::move(label)) {
    if (acts_ == 0) throw EmptyActionSet("loss matrix has no actions");
    if (obs_ < 2) throw DomainError("loss matrix needs at least two observations");
    if (l_.size() != obs_ * acts_) throw DomainError("loss matrix entry count mismatch");
    for (double v : l_)
      if (!(v >= 0.0 && v <= 1.0)) throw DomainError("loss entries must lie in [0,1]");
  }

  static LossMatrix zero_one(std::size_t d = 2) {
    std::vector<double> e(d * d, 1.0);
    for (std::size_t i = 0; i < d; ++i) e[i * d + i] = 0.0;
    return LossMatrix(d, d, std::move(e), "zero-one");
  }
  /// Binary observations and actions: {{l00, l01}, {l10, l11}}.
  static LossMatrix binary(double l00, double l01, double l10, double l11, std::string label = "binary") {
    return LossMatrix(2, 2, {l00, l01, l10, l11}, std::move(label));
  }
  /// l01 = 0.9, l10 = 0.1: acting 1 on a 0 is expensive.
  static LossMatrix asymmetric() { return binary(0.0, 0.9, 0.1, 0.0, "asymmetric"); }
  /// Zero-one loss plus a third action "abstain" costing `cost` whatever happens.
  static LossMatrix abstain(double cost = 0.3) {
    return LossMatrix(2, 3, {0.0, 1.0, cost, 1.0, 0.0, cost}, "abstain");
  }

  std::size_t observations() const { return obs_; }
  std::size_t actions() const { return acts_; }
  const std::string& name() const { return label_; }
  double operator()(std::size_t x, std::size_t y) const { return l_[x * acts_ + y]; }

  /// sum_x p(x) l(x, y)
  double expected(std::span<const double> p, std::size_t y) const {
    double s = 0.0;
    for (std::size_t x = 0; x < obs_; ++x) s += p[x] * (*this)(x, y);
    return s;
  }

 private:
  std::size_t obs_;
  std::size_t acts_;
  std::vector<double> l_;
  std::string label_;
};

struct Act {
  std::size_t action = 0;
  double deficiency = 0.0;   // 1 - sum of the supplied predictive
  bool renormalized = false; // predictive was rescaled before acting
  bool degenerate = false;   // every action attains the minimum
};

/// argmin_y sum_x rho(x) l(x,y); ties go to the lowest action index.
/// Deficient predictives are rescaled first.
inline Act bayes_act(std::span<const double> pred, const LossMatrix& loss) {
  if (loss.actions() == 0) throw EmptyActionSet("no actions");
  if (pred.size() != loss.observations()) throw DomainError("predictive size differs from observation count");
  double total = 0.0;
  for (double p : pred) {
    if (!(p >= 0.0)) throw DomainError("negative predictive entry");
    total += p;
  }
  Act act;
  act.deficiency = 1.0 - total;
  std::vector<double> q(pred.begin(), pred.end());
  if (total > 0.0 && std::abs(act.deficiency) > 1e-12) {
    act.renormalized = true;
    for (double& v : q) v /= total;
  }
  double best = loss.expected(q, 0);
  std::size_t ties = 1;
  for (std::size_t y = 1; y < loss.actions(); ++y) {
    const double e = loss.expected(q, y);
    if (e < best) {
      best = e;
      act.action = y;
      ties = 1;
    } else if (e == best) {
      ++ties;
    }
  }
  act.degenerate = ties == loss.actions() && loss.actions() > 1;
  return act;
}

/// gamma = (l01 - l00) / (l01 - l00 + l10 - l11): act 1 iff rho(1) > gamma.
/// Empty when the denominator vanishes.
inline std::optional<double> binary_threshold(const LossMatrix& loss) {
  if (loss.observations() != 2 || loss.actions() != 2) throw DomainError("binary loss matrix required");
  const double num = loss(0, 1) - loss(0, 0);
  const double den = num + loss(1, 0) - loss(1, 1);
  if (den == 0.0) return std::nullopt;
  return num / den;
}

}  // namespace unipred
