#pragma once

#include <atomic>
#include <cstdint>
#include <algorithm>
#include <functional>
#include <optional>
#include <thread>
#include <vector>

#include "unipred/solomonoff/vm.hpp"

namespace unipred::solomonoff {

/// Largest L accepted without raising the cap explicitly.
inline constexpr unsigned kDefaultLengthCap = 24;

namespace detail {

struct Subtree {
  Machine machine;
  PackedBits output;
};

inline ProgramRecord make_record(const Machine& m, RunStatus status, const PackedBits& out) {
  ProgramRecord rec;
  rec.program = m.program();
  rec.length = static_cast<std::uint8_t>(m.tape_length());
  rec.status = status;
  rec.steps = static_cast<std::uint32_t>(m.steps());
  rec.output = out;
  rec.marks.assign(m.marks().begin(), m.marks().end());
  return rec;
}

// Depth-first walk of the program tree below `m`. Children are visited 0
// before 1, so records come out in lexicographic program order. Nodes at
// depth `stop_depth` that still need input are handed to `defer` instead of
// being expanded.
inline void walk(Machine m, PackedBits& out, unsigned max_length, unsigned stop_depth,
                 std::vector<ProgramRecord>& records, const std::function<void(Subtree&&)>& defer) {
  const RunStatus status = m.run(out);
  if (status != RunStatus::NeedsInput || m.tape_length() == max_length) {
    records.push_back(make_record(m, status, out));
    return;
  }
  if (m.tape_length() == stop_depth) {
    defer(Subtree{m, out});
    return;
  }
  const std::size_t keep = out.size();
  for (int b = 0; b < 2; ++b) {
    Machine child = m;
    child.feed(b != 0);
    walk(child, out, max_length, stop_depth, records, defer);
    out.truncate(keep);
  }
}

}  // namespace detail

/// A unit of enumeration work: either finished records or a subtree root.
struct Partition {
  std::vector<ProgramRecord> records;  // records found above the split depth
  std::optional<detail::Subtree> root;
};

/// Splits the program tree at a fixed depth. The concatenation of each
/// partition's records, in order, is the canonical record order.
inline std::vector<Partition> partition_program_space(const EnumerationBudget& budget,
                                                      unsigned split_depth) {
  budget.validate();
  std::vector<Partition> parts;
  std::vector<ProgramRecord> pending;
  PackedBits out;
  detail::walk(Machine(budget), out, budget.max_length, std::min(split_depth, budget.max_length), pending,
               [&](detail::Subtree&& sub) {
                 parts.push_back(Partition{std::move(pending), std::move(sub)});
                 pending.clear();
               });
  if (!pending.empty()) parts.push_back(Partition{std::move(pending), std::nullopt});
  return parts;
}

/// Enumerates the subtree held by a partition.
inline std::vector<ProgramRecord> expand_partition(const Partition& part, const EnumerationBudget& budget) {
  std::vector<ProgramRecord> records = part.records;
  if (!part.root) return records;
  const Machine& root = part.root->machine;
  PackedBits out = part.root->output;
  const std::size_t keep = out.size();
  for (int b = 0; b < 2; ++b) {
    Machine child = root;
    child.feed(b != 0);
    detail::walk(child, out, budget.max_length, budget.max_length + 1, records,
                 [](detail::Subtree&&) {});
    out.truncate(keep);
  }
  return records;
}

struct EnumerateOptions {
  unsigned split_depth = 8;
  unsigned workers = 0;  // 0 = hardware concurrency
  unsigned length_cap = kDefaultLengthCap;
};

/// Visits every program of length <= L that the machine either commits to
/// (halts, hits the step or output budget without asking for more input) or
/// still needs input at length exactly L. The result is prefix-free and
/// covers the whole program space, in canonical (lexicographic) order,
/// independent of the worker count.
inline std::vector<ProgramRecord> enumerate_programs(const EnumerationBudget& budget,
                                                     const EnumerateOptions& opts = {}) {
  budget.validate();
  if (budget.max_length > opts.length_cap)
    throw BudgetExceeded("2^L exceeds the configured enumeration cap");
  const auto parts = partition_program_space(budget, opts.split_depth);
  std::vector<std::vector<ProgramRecord>> results(parts.size());

  unsigned workers = opts.workers != 0 ? opts.workers : std::max(1U, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(parts.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < parts.size(); i = next++) results[i] = expand_partition(parts[i], budget);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  std::vector<ProgramRecord> all;
  std::size_t total = 0;
  for (const auto& r : results) total += r.size();
  all.reserve(total);
  for (auto& r : results)
    for (auto& rec : r) all.push_back(std::move(rec));
  return all;
}

}  // namespace unipred::solomonoff
