#pragma once

// A tiny monotone machine. Programs are read left to right from a binary
// tape as a stream of prefix-coded opcodes; output is append-only. Asking for
// a tape bit beyond the end of the supplied program is reported as
// NeedsInput, which is what makes the set of minimal programs prefix-free.
//
// Instruction table (version 1):
//
//   code    opcode       effect
//   0       DUP-COUNTER  c <- 2c
//   100     INC          c <- c + 1
//   101     EMIT1        write c ones   (c = 0: ones forever)
//   1100    EMIT0        write c zeros  (c = 0: zeros forever)
//   1101    HALT         stop
//   11100   PRINT        write c in binary, most significant bit first
//   11101   NOP          reserved, does nothing
//   11110   LOOP-START   open a loop running c times (c = 0: forever)
//   11111   LOOP-END     close the innermost loop; no-op when none is open
//
// The counter c starts at 0 and saturates at kCounterCap. Every loop
// iteration restarts with the counter value seen at LOOP-START. One step is
// charged per executed opcode and per written symbol.

#include <array>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "unipred/errors.hpp"
#include "unipred/solomonoff/bits.hpp"

namespace unipred::solomonoff {

inline constexpr std::uint16_t kInstructionSetVersion = 1;
inline constexpr std::uint64_t kCounterCap = std::uint64_t{1} << 40;
inline constexpr unsigned kMaxProgramLength = 30;

enum class Op : std::uint8_t { Dup, Inc, Emit1, Emit0, Halt, Print, Nop, LoopStart, LoopEnd };

struct OpCode {
  Op op;
  std::uint8_t code;
  std::uint8_t length;
  std::string_view mnemonic;
};

inline constexpr std::array<OpCode, 9> kInstructionTable{{
    {Op::Dup, 0b0, 1, "DUP-COUNTER"},
    {Op::Inc, 0b100, 3, "INC"},
    {Op::Emit1, 0b101, 3, "EMIT1"},
    {Op::Emit0, 0b1100, 4, "EMIT0"},
    {Op::Halt, 0b1101, 4, "HALT"},
    {Op::Print, 0b11100, 5, "PRINT"},
    {Op::Nop, 0b11101, 5, "NOP"},
    {Op::LoopStart, 0b11110, 5, "LOOP-START"},
    {Op::LoopEnd, 0b11111, 5, "LOOP-END"},
}};

inline const OpCode& opcode_info(Op op) {
  for (const auto& entry : kInstructionTable)
    if (entry.op == op) return entry;
  throw DomainError("unknown opcode");
}

enum class RunStatus : std::uint8_t {
  NeedsInput = 0,  // wants a tape bit beyond the supplied program
  Halted = 1,
  StepLimit = 2,   // still running when the step budget ran out
  OutputCap = 3,   // output reached the configured cap
};

inline std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::NeedsInput: return "needs-input";
    case RunStatus::Halted: return "halted";
    case RunStatus::StepLimit: return "step-limit";
    case RunStatus::OutputCap: return "output-cap";
  }
  return "?";
}

struct EnumerationBudget {
  unsigned max_length = 20;          // L
  std::uint64_t max_steps = 10000;   // T
  std::uint32_t output_cap = 512;

  void validate() const {
    if (max_length == 0 || max_steps == 0 || output_cap == 0)
      throw DomainError("enumeration budget entries must be positive");
    if (max_length > kMaxProgramLength) throw BudgetExceeded("program length above machine limit");
  }
  friend bool operator==(const EnumerationBudget&, const EnumerationBudget&) = default;
};

/// Output length observed at the moment a given tape bit was first requested.
/// Only requests at which the output had grown since the previous mark are
/// kept.
struct ReadMark {
  std::uint8_t bit_index;
  std::uint16_t output_length;
  friend bool operator==(const ReadMark&, const ReadMark&) = default;
};

/// Machine state. Cheap to copy apart from the caller-owned output buffer,
/// which lets enumeration branch on every tape bit.
class Machine {
 public:
  explicit Machine(const EnumerationBudget& budget) : budget_(budget) { budget.validate(); }

  void feed(bool bit) {
    if (tape_length_ >= kMaxProgramLength) throw BudgetExceeded("tape longer than machine limit");
    if (bit) tape_ |= std::uint32_t{1} << tape_length_;
    ++tape_length_;
  }

  unsigned tape_length() const { return tape_length_; }
  unsigned bits_read() const { return bits_read_; }
  std::uint64_t steps() const { return steps_; }
  std::uint32_t program() const { return tape_; }
  std::span<const ReadMark> marks() const { return {marks_.data(), mark_count_}; }

  /// Runs until the machine stops or needs another tape bit. Output is
  /// appended to `out`, which must hold exactly this machine's output so far.
  RunStatus run(PackedBits& out) {
    for (;;) {
      if (out.size() >= budget_.output_cap) return RunStatus::OutputCap;
      if (steps_ >= budget_.max_steps) return RunStatus::StepLimit;
      if (ip_ == op_count_ && !decode_next(out.size())) return RunStatus::NeedsInput;

      const Op op = ops_[ip_++];
      ++steps_;
      switch (op) {
        case Op::Dup:
          counter_ = std::min(kCounterCap, counter_ * 2);
          break;
        case Op::Inc:
          counter_ = std::min(kCounterCap, counter_ + 1);
          break;
        case Op::Emit1:
        case Op::Emit0: {
          const bool bit = op == Op::Emit1;
          if (counter_ == 0) {
            for (;;)
              if (auto s = write(out, bit)) return *s;
          }
          for (std::uint64_t k = 0; k < counter_; ++k)
            if (auto s = write(out, bit)) return *s;
          break;
        }
        case Op::Print: {
          const std::uint64_t c = counter_;
          int top = 63;
          while (top > 0 && ((c >> top) & 1U) == 0) --top;
          for (int b = top; b >= 0; --b)
            if (auto s = write(out, ((c >> b) & 1U) != 0)) return *s;
          break;
        }
        case Op::Halt:
          return RunStatus::Halted;
        case Op::Nop:
          break;
        case Op::LoopStart:
          if (frame_count_ == frames_.size()) throw BudgetExceeded("loop nesting too deep");
          frames_[frame_count_++] = Frame{ip_, counter_, counter_};
          break;
        case Op::LoopEnd: {
          if (frame_count_ == 0) break;
          Frame& f = frames_[frame_count_ - 1];
          if (f.remaining == 0) {
            counter_ = f.entry;
            ip_ = f.body;
          } else if (--f.remaining > 0) {
            counter_ = f.entry;
            ip_ = f.body;
          } else {
            --frame_count_;
          }
          break;
        }
      }
    }
  }

 private:
  struct Frame {
    std::uint8_t body = 0;
    std::uint64_t remaining = 0;  // 0 = unbounded
    std::uint64_t entry = 0;
  };

  // Writes one output symbol; returns a status when the machine must stop.
  std::optional<RunStatus> write(PackedBits& out, bool bit) {
    if (steps_ >= budget_.max_steps) return RunStatus::StepLimit;
    out.push_back(bit);
    ++steps_;
    if (out.size() >= budget_.output_cap) return RunStatus::OutputCap;
    return std::nullopt;
  }

  bool read_bit(unsigned index, std::size_t output_length, bool& bit) {
    if (index >= tape_length_) return false;
    if (index >= bits_read_) {
      bits_read_ = index + 1;
      const auto len = static_cast<std::uint16_t>(output_length);
      if (mark_count_ == 0 ? len > 0 : marks_[mark_count_ - 1].output_length != len)
        marks_[mark_count_++] = ReadMark{static_cast<std::uint8_t>(index), len};
    }
    bit = ((tape_ >> index) & 1U) != 0;
    return true;
  }

  bool decode_next(std::size_t output_length) {
    unsigned pos = decode_pos_;
    std::uint8_t code = 0;
    for (std::uint8_t len = 1; len <= 5; ++len) {
      bool bit = false;
      if (!read_bit(pos++, output_length, bit)) return false;
      code = static_cast<std::uint8_t>((code << 1) | (bit ? 1 : 0));
      for (const auto& entry : kInstructionTable) {
        if (entry.length == len && entry.code == code) {
          ops_[op_count_++] = entry.op;
          decode_pos_ = pos;
          return true;
        }
      }
    }
    return false;  // unreachable: the code is complete
  }

  EnumerationBudget budget_;
  std::uint32_t tape_ = 0;  // bit i of the program at bit position i
  unsigned tape_length_ = 0;
  unsigned bits_read_ = 0;
  unsigned decode_pos_ = 0;
  std::array<Op, kMaxProgramLength> ops_{};
  std::uint8_t op_count_ = 0;
  std::uint8_t ip_ = 0;
  std::uint64_t counter_ = 0;
  std::uint64_t steps_ = 0;
  std::array<Frame, 8> frames_{};
  std::size_t frame_count_ = 0;
  std::array<ReadMark, kMaxProgramLength> marks_{};
  std::size_t mark_count_ = 0;
};

/// A program together with what the machine did with it.
struct ProgramRecord {
  std::uint32_t program = 0;  // bit i at position i
  std::uint8_t length = 0;
  RunStatus status = RunStatus::NeedsInput;
  std::uint32_t steps = 0;
  PackedBits output;
  std::vector<ReadMark> marks;

  bool halted() const { return status == RunStatus::Halted; }
  /// Committed: the machine will never read past this program.
  bool committed() const { return status != RunStatus::NeedsInput; }
  bool bit(unsigned i) const { return ((program >> i) & 1U) != 0; }

  std::string program_string() const {
    std::string s(length, '0');
    for (unsigned i = 0; i < length; ++i)
      if (bit(i)) s[i] = '1';
    return s;
  }

  /// Length of the shortest prefix of this program after which the output
  /// already has at least `n` symbols.
  unsigned prefix_length_for_output(std::size_t n) const {
    if (n == 0) return 0;
    for (const auto& m : marks)
      if (m.output_length >= n) return m.bit_index;
    return length;
  }

  friend bool operator==(const ProgramRecord&, const ProgramRecord&) = default;
};

/// Runs a single program from scratch.
inline ProgramRecord vm_run(SeqView program, const EnumerationBudget& budget) {
  if (program.size() > budget.max_length) throw BudgetExceeded("program longer than budget L");
  Machine m(budget);
  for (auto b : program) m.feed(b != 0);
  PackedBits out;
  const RunStatus status = m.run(out);
  ProgramRecord rec;
  rec.program = m.program();
  rec.length = static_cast<std::uint8_t>(program.size());
  rec.status = status;
  rec.steps = static_cast<std::uint32_t>(m.steps());
  rec.output = std::move(out);
  rec.marks.assign(m.marks().begin(), m.marks().end());
  return rec;
}

inline ProgramRecord vm_run(std::string_view program, const EnumerationBudget& budget) {
  return vm_run(parse_seq(program), budget);
}

/// Concatenates opcode codes into a program tape.
inline Seq assemble(std::initializer_list<Op> ops) {
  Seq bits;
  for (Op op : ops) {
    const auto& info = opcode_info(op);
    for (int b = info.length - 1; b >= 0; --b) bits.push_back((info.code >> b) & 1U);
  }
  return bits;
}

}  // namespace unipred::solomonoff
