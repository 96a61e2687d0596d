#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "unipred/core.hpp"

namespace unipred::solomonoff {

/// Append-only bit string packed MSB-first into 64-bit words, so that word
/// comparison matches lexicographic bit order.
class PackedBits {
 public:
  PackedBits() = default;
  explicit PackedBits(SeqView bits) {
    for (auto b : bits) push_back(b != 0);
  }

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  bool operator[](std::size_t i) const { return (words_[i >> 6] >> (63 - (i & 63))) & 1U; }

  void push_back(bool b) {
    if ((size_ & 63) == 0) words_.push_back(0);
    if (b) words_.back() |= std::uint64_t{1} << (63 - (size_ & 63));
    ++size_;
  }

  void truncate(std::size_t n) {
    if (n >= size_) return;
    size_ = n;
    words_.resize((n + 63) / 64);
    if ((n & 63) != 0) words_.back() &= ~std::uint64_t{0} << (64 - (n & 63));
  }

  std::span<const std::uint64_t> words() const { return words_; }

  bool starts_with(SeqView x) const {
    if (x.size() > size_) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if ((*this)[i] != (x[i] != 0)) return false;
    return true;
  }

  bool equals(SeqView x) const { return x.size() == size_ && starts_with(x); }

  Seq to_seq() const {
    Seq s(size_);
    for (std::size_t i = 0; i < size_; ++i) s[i] = (*this)[i] ? 1 : 0;
    return s;
  }

  std::string to_string() const {
    std::string s(size_, '0');
    for (std::size_t i = 0; i < size_; ++i)
      if ((*this)[i]) s[i] = '1';
    return s;
  }

  /// Lexicographic order, a proper prefix sorting first.
  friend std::strong_ordering operator<=>(const PackedBits& a, const PackedBits& b) {
    const std::size_t common = std::min(a.size_, b.size_);
    const std::size_t full = common / 64;
    for (std::size_t w = 0; w < full; ++w)
      if (a.words_[w] != b.words_[w]) return a.words_[w] <=> b.words_[w];
    const std::size_t rest = common & 63;
    if (rest != 0) {
      const std::uint64_t mask = ~std::uint64_t{0} << (64 - rest);
      const auto wa = a.words_[full] & mask;
      const auto wb = b.words_[full] & mask;
      if (wa != wb) return wa <=> wb;
    }
    return a.size_ <=> b.size_;
  }
  friend bool operator==(const PackedBits& a, const PackedBits& b) {
    return (a <=> b) == std::strong_ordering::equal;
  }

 private:
  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
};

/// Compare the first |x| bits of `bits` against x: negative if bits' prefix
/// sorts before x, zero if bits starts with x, positive otherwise.
inline int compare_prefix(const PackedBits& bits, SeqView x) {
  const std::size_t common = std::min(bits.size(), x.size());
  for (std::size_t i = 0; i < common; ++i) {
    const bool b = bits[i];
    const bool c = x[i] != 0;
    if (b != c) return b ? 1 : -1;
  }
  return bits.size() >= x.size() ? 0 : -1;
}

}  // namespace unipred::solomonoff
