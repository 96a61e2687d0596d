#pragma once

// Estimates of M, Km and K from an enumerated program set.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "unipred/core.hpp"
#include "unipred/solomonoff/cache.hpp"
#include "unipred/solomonoff/enumerate.hpp"

namespace unipred::solomonoff {

/// Read-only query structure over a record set. Records are indexed by
/// output so that every prefix query is two binary searches.
class ProgramIndex {
 public:
  ProgramIndex(std::vector<ProgramRecord> records, const EnumerationBudget& budget)
      : records_(std::move(records)), budget_(budget) {
    order_.resize(records_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return records_[a].output < records_[b].output; });
    units_.assign(records_.size() + 1, 0);
    for (std::size_t i = 0; i < order_.size(); ++i) units_[i + 1] = units_[i] + unit(records_[order_[i]]);
    for (const auto& r : records_) {
      if (!r.halted()) continue;
      auto [it, fresh] = halting_.try_emplace(r.output.to_string(), r.length);
      if (!fresh) it->second = std::min<unsigned>(it->second, r.length);
    }
  }

  explicit ProgramIndex(CacheContents c) : ProgramIndex(std::move(c.records), c.header.budget) {}

  const std::vector<ProgramRecord>& records() const { return records_; }
  const EnumerationBudget& budget() const { return budget_; }

  /// sum 2^{-l(p)} over all records (1 when the frontier is complete).
  double kraft_total() const { return std::ldexp(static_cast<double>(units_.back()), -static_cast<int>(budget_.max_length)); }
  /// sum 2^{-l(p)} over records the machine committed to.
  double kraft_committed() const {
    std::uint64_t u = 0;
    for (const auto& r : records_)
      if (r.committed()) u += unit(r);
    return std::ldexp(static_cast<double>(u), -static_cast<int>(budget_.max_length));
  }

  /// M^(x): mass of programs whose output starts with x.
  LogMass approx_M(SeqView x) const {
    const auto [lo, hi] = range(x);
    const std::uint64_t u = units_[hi] - units_[lo];
    if (u == 0) return LogMass::zero();
    return LogMass::from_log(std::log(static_cast<double>(u)) -
                             static_cast<double>(budget_.max_length) * std::numbers::ln2);
  }

  /// M^(a|x) = M^(xa)/M^(x).
  LogMass approx_conditional_M(SeqView x, Symbol a) const {
    if (a > 1) throw DomainError("binary alphabet");
    const LogMass den = approx_M(x);
    if (den.is_zero()) throw ConditioningOnNull("no enumerated program produces the condition");
    Seq xa(x.begin(), x.end());
    xa.push_back(a);
    return approx_M(xa) / den;
  }

  /// Shortest program prefix after which the output starts with x.
  std::optional<unsigned> approx_Km(SeqView x) const {
    const auto [lo, hi] = range(x);
    std::optional<unsigned> best;
    for (std::size_t i = lo; i < hi; ++i) {
      const unsigned l = records_[order_[i]].prefix_length_for_output(x.size());
      if (!best || l < *best) best = l;
    }
    return best;
  }

  /// Shortest halting program whose output is exactly the binary expansion of n.
  std::optional<unsigned> approx_K_int(std::uint64_t n) const {
    const auto it = halting_.find(binary_expansion(n));
    if (it == halting_.end()) return std::nullopt;
    return it->second;
  }

  static std::string binary_expansion(std::uint64_t n) {
    if (n == 0) return "0";
    std::string s;
    for (; n != 0; n >>= 1) s.push_back((n & 1U) ? '1' : '0');
    std::reverse(s.begin(), s.end());
    return s;
  }

 private:
  std::uint64_t unit(const ProgramRecord& r) const { return std::uint64_t{1} << (budget_.max_length - r.length); }

  std::pair<std::size_t, std::size_t> range(SeqView x) const {
    const auto lo = std::partition_point(order_.begin(), order_.end(),
                                         [&](std::size_t i) { return compare_prefix(records_[i].output, x) < 0; });
    const auto hi = std::partition_point(lo, order_.end(),
                                         [&](std::size_t i) { return compare_prefix(records_[i].output, x) == 0; });
    return {static_cast<std::size_t>(lo - order_.begin()), static_cast<std::size_t>(hi - order_.begin())};
  }

  std::vector<ProgramRecord> records_;
  EnumerationBudget budget_;
  std::vector<std::size_t> order_;
  std::vector<std::uint64_t> units_;
  std::unordered_map<std::string, unsigned> halting_;
};

/// M^ as a semimeasure on binary strings.
class ApproxM final : public Semimeasure {
 public:
  explicit ApproxM(std::shared_ptr<const ProgramIndex> index) : index_(std::move(index)) {}
  Alphabet alphabet() const override { return Alphabet(2); }
  std::string name() const override { return "approx-M"; }
  LogMass mass(SeqView x) const override { return index_->approx_M(x); }

 private:
  std::shared_ptr<const ProgramIndex> index_;
};

// ---------------------------------------------------------------------------
// Rank statistics

/// Ranks starting at 1, ties sharing their average rank.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  return pearson(average_ranks(a), average_ranks(b));
}

/// One-sided permutation p-value for a positive Spearman correlation.
inline double spearman_permutation_p(const std::vector<double>& a, const std::vector<double>& b,
                                     std::size_t permutations, std::uint64_t seed) {
  const auto ra = average_ranks(a);
  auto rb = average_ranks(b);
  const double observed = pearson(ra, rb);
  std::mt19937_64 rng(seed);
  std::size_t hits = 0;
  for (std::size_t k = 0; k < permutations; ++k) {
    for (std::size_t i = rb.size(); i > 1; --i) std::swap(rb[i - 1], rb[rng() % i]);
    if (pearson(ra, rb) >= observed) ++hits;
  }
  return static_cast<double>(hits + 1) / static_cast<double>(permutations + 1);
}

// ---------------------------------------------------------------------------
// Experiments on x = 1^n

struct MagicRow {
  std::size_t n;
  double surprise;               // M^(0|1^n)
  std::optional<unsigned> k_int; // K^(n)
  double simple_weight;          // 2^{-K^(n)}, 0 when K^(n) is unknown
  double ratio;                  // M^(0|1^n) 2^{K^(n)}, NaN when undefined
};

struct PowerCheck {
  std::size_t n;
  double below, at, above;  // M^(0|1^{n-1}), M^(0|1^n), M^(0|1^{n+1})
  bool local_max() const { return at >= below && at >= above; }
};

struct MagicScan {
  std::vector<MagicRow> rows;
  std::vector<PowerCheck> powers;
  double local_max_fraction = 0.0;
  double spearman = 0.0;
  double p_value = 1.0;
  std::vector<double> partial_sums;  // sum_{m <= n} M^(0|1^m)
  double band_decades = 0.0;         // log10 spread of the finite positive ratios
};

inline Seq ones(std::size_t n) { return Seq(n, 1); }

/// M^(0|1^n) against 2^{-K^(n)} for n in [lo, hi].
inline MagicScan magic_number_scan(const ProgramIndex& idx, std::size_t lo, std::size_t hi,
                                   std::size_t permutations = 2000, std::uint64_t seed = 1) {
  if (lo == 0 || hi < lo) throw DomainError("bad scan range");
  if (hi + 2 > idx.budget().output_cap) throw BudgetExceeded("scan range beyond the output cap");
  MagicScan s;
  auto surprise = [&](std::size_t n) {
    const Seq x = ones(n);
    return idx.approx_M(x).is_zero() ? 0.0 : idx.approx_conditional_M(x, 0).prob();
  };
  std::vector<double> a, b;
  double total = 0.0;
  double rmin = std::numeric_limits<double>::infinity();
  double rmax = -rmin;
  for (std::size_t n = lo; n <= hi; ++n) {
    MagicRow row{n, surprise(n), idx.approx_K_int(n), 0.0, std::numeric_limits<double>::quiet_NaN()};
    if (row.k_int) {
      row.simple_weight = std::ldexp(1.0, -static_cast<int>(*row.k_int));
      if (row.surprise > 0.0) {
        row.ratio = row.surprise / row.simple_weight;
        rmin = std::min(rmin, std::log10(row.ratio));
        rmax = std::max(rmax, std::log10(row.ratio));
      }
    }
    total += row.surprise;
    s.partial_sums.push_back(total);
    a.push_back(row.surprise);
    b.push_back(row.simple_weight);
    s.rows.push_back(row);
  }
  s.band_decades = rmax >= rmin ? rmax - rmin : 0.0;
  s.spearman = spearman(a, b);
  s.p_value = spearman_permutation_p(a, b, permutations, seed);
  std::size_t hits = 0;
  for (std::size_t p = 1; p <= hi; p <<= 1) {
    if (p < lo || p < 2) continue;
    PowerCheck c{p, surprise(p - 1), surprise(p), surprise(p + 1)};
    hits += c.local_max() ? 1 : 0;
    s.powers.push_back(c);
  }
  if (!s.powers.empty()) s.local_max_fraction = static_cast<double>(hits) / static_cast<double>(s.powers.size());
  return s;
}

struct ConvergenceRow {
  std::size_t n;
  double next_one;    // M^(1|1^n)
  double next_zero;   // M^(0|1^n)
  double deficit_sum; // sum_{t<=n} (1 - M^(1|1^{t-1}))
  std::optional<unsigned> km;  // Km^(1^n)
};

struct ConvergenceTrace {
  std::vector<ConvergenceRow> rows;
  std::vector<double> block_means;  // mean of M^(1|1^n) over n in [2^j, 2^{j+1})
  bool blocks_nondecreasing = true;
  bool deficit_within_km = true;    // deficit_sum <= Km^(1^n) ln 2 for every n
};

/// M^(1|1^n) for n = 0..nmax on the all-ones sequence.
inline ConvergenceTrace computable_convergence(const ProgramIndex& idx, std::size_t nmax) {
  if (nmax + 1 > idx.budget().output_cap) throw BudgetExceeded("range beyond the output cap");
  ConvergenceTrace tr;
  double deficit = 0.0;
  for (std::size_t n = 0; n <= nmax; ++n) {
    const Seq x = ones(n);
    ConvergenceRow row{n, idx.approx_conditional_M(x, 1).prob(), idx.approx_conditional_M(x, 0).prob(), 0.0,
                       idx.approx_Km(ones(n + 1))};
    deficit += 1.0 - row.next_one;
    row.deficit_sum = deficit;
    if (!row.km || deficit > *row.km * std::numbers::ln2 + 1e-12) tr.deficit_within_km = false;
    tr.rows.push_back(row);
  }
  for (std::size_t b = 1; b <= nmax; b <<= 1) {
    const std::size_t e = std::min(nmax + 1, 2 * b);
    double sum = 0.0;
    for (std::size_t n = b; n < e; ++n) sum += tr.rows[n].next_one;
    tr.block_means.push_back(sum / static_cast<double>(e - b));
  }
  for (std::size_t j = 1; j < tr.block_means.size(); ++j)
    if (tr.block_means[j] < tr.block_means[j - 1]) tr.blocks_nondecreasing = false;
  return tr;
}

}  // namespace unipred::solomonoff
