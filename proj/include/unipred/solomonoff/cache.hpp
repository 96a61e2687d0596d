#pragma once

// On-disk program cache.
//
// Layout, all integers little-endian:
//
//   header (48 bytes)
//     char[4]  magic "MVM1"
//     u16      instruction-set version
//     u16      format version
//     u32      L (max program length)
//     u64      T (max steps)
//     u32      output cap
//     u32      split depth used for partitioning
//     u32      partitions total
//     u32      partitions written
//     u64      record count
//     u32      CRC-32 of the record bytes
//   records, in canonical (lexicographic program) order
//     u8       program length
//     bytes    program bits, most significant bit first, ceil(len/8) bytes
//     u8       run status (0 needs-input, 1 halted, 2 step-limit, 3 output-cap)
//     u32      steps used
//     u32      output length
//     bytes    output bits, most significant bit first
//     u8       mark count, then per mark: u8 bit index, u16 output length
//
// Records are appended one partition at a time and the header is rewritten
// after every batch, so an interrupted build resumes where it stopped.

#include <array>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <boost/crc.hpp>

#include "unipred/errors.hpp"
#include "unipred/solomonoff/enumerate.hpp"

namespace unipred::solomonoff {

inline constexpr std::array<char, 4> kCacheMagic{'M', 'V', 'M', '1'};
inline constexpr std::uint16_t kCacheFormatVersion = 1;
inline constexpr std::size_t kCacheHeaderSize = 48;

struct CacheHeader {
  std::uint16_t isa_version = kInstructionSetVersion;
  std::uint16_t format_version = kCacheFormatVersion;
  EnumerationBudget budget;
  std::uint32_t split_depth = 8;
  std::uint32_t partitions_total = 0;
  std::uint32_t partitions_done = 0;
  std::uint64_t record_count = 0;
  std::uint32_t checksum = 0;

  bool complete() const { return partitions_done == partitions_total; }
};

namespace detail {

class ByteWriter {
 public:
  std::vector<unsigned char> bytes;
  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) bytes.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
};

class ByteReader {
 public:
  ByteReader(const unsigned char* data, std::size_t size) : p_(data), end_(data + size) {}
  bool done() const { return p_ == end_; }
  std::uint64_t read(int n) {
    if (end_ - p_ < n) throw CacheCorrupt("cache truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(p_[i]) << (8 * i);
    p_ += n;
    return v;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(read(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(read(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(read(4)); }
  std::uint64_t u64() { return read(8); }

 private:
  const unsigned char* p_;
  const unsigned char* end_;
};

inline void encode_record(const ProgramRecord& r, ByteWriter& w) {
  w.u8(r.length);
  for (unsigned byte = 0; byte < (r.length + 7u) / 8u; ++byte) {
    std::uint8_t v = 0;
    for (unsigned b = 0; b < 8; ++b) {
      const unsigned i = byte * 8 + b;
      if (i < r.length && r.bit(i)) v |= static_cast<std::uint8_t>(0x80u >> b);
    }
    w.u8(v);
  }
  w.u8(static_cast<std::uint8_t>(r.status));
  w.u32(r.steps);
  w.u32(static_cast<std::uint32_t>(r.output.size()));
  for (std::size_t byte = 0; byte < (r.output.size() + 7) / 8; ++byte) {
    std::uint8_t v = 0;
    for (unsigned b = 0; b < 8; ++b) {
      const std::size_t i = byte * 8 + b;
      if (i < r.output.size() && r.output[i]) v |= static_cast<std::uint8_t>(0x80u >> b);
    }
    w.u8(v);
  }
  w.u8(static_cast<std::uint8_t>(r.marks.size()));
  for (const auto& m : r.marks) {
    w.u8(m.bit_index);
    w.u16(m.output_length);
  }
}

inline ProgramRecord decode_record(ByteReader& rd, const EnumerationBudget& budget) {
  ProgramRecord r;
  r.length = rd.u8();
  if (r.length > budget.max_length) throw CacheCorrupt("program longer than the cache budget");
  for (unsigned byte = 0; byte < (r.length + 7u) / 8u; ++byte) {
    const std::uint8_t v = rd.u8();
    for (unsigned b = 0; b < 8; ++b) {
      const unsigned i = byte * 8 + b;
      if (i < r.length && (v & (0x80u >> b)) != 0) r.program |= std::uint32_t{1} << i;
    }
  }
  const std::uint8_t status = rd.u8();
  if (status > 3) throw CacheCorrupt("bad run status");
  r.status = static_cast<RunStatus>(status);
  r.steps = rd.u32();
  const std::uint32_t olen = rd.u32();
  if (olen > budget.output_cap) throw CacheCorrupt("output longer than the cache budget");
  for (std::size_t byte = 0; byte < (olen + 7) / 8; ++byte) {
    const std::uint8_t v = rd.u8();
    for (unsigned b = 0; b < 8; ++b)
      if (byte * 8 + b < olen) r.output.push_back((v & (0x80u >> b)) != 0);
  }
  const std::uint8_t marks = rd.u8();
  for (unsigned i = 0; i < marks; ++i) {
    const std::uint8_t bit = rd.u8();
    const std::uint16_t len = rd.u16();
    r.marks.push_back(ReadMark{bit, len});
  }
  return r;
}

inline std::vector<unsigned char> encode_header(const CacheHeader& h) {
  ByteWriter w;
  for (char c : kCacheMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u16(h.isa_version);
  w.u16(h.format_version);
  w.u32(h.budget.max_length);
  w.u64(h.budget.max_steps);
  w.u32(h.budget.output_cap);
  w.u32(h.split_depth);
  w.u32(h.partitions_total);
  w.u32(h.partitions_done);
  w.u64(h.record_count);
  w.u32(h.checksum);
  return w.bytes;
}

inline CacheHeader decode_header(const unsigned char* data, std::size_t size) {
  if (size < kCacheHeaderSize) throw CacheCorrupt("cache header truncated");
  for (std::size_t i = 0; i < 4; ++i)
    if (data[i] != static_cast<unsigned char>(kCacheMagic[i])) throw CacheCorrupt("bad cache magic");
  ByteReader rd(data + 4, kCacheHeaderSize - 4);
  CacheHeader h;
  h.isa_version = rd.u16();
  h.format_version = rd.u16();
  h.budget.max_length = rd.u32();
  h.budget.max_steps = rd.u64();
  h.budget.output_cap = rd.u32();
  h.split_depth = rd.u32();
  h.partitions_total = rd.u32();
  h.partitions_done = rd.u32();
  h.record_count = rd.u64();
  h.checksum = rd.u32();
  if (h.partitions_done > h.partitions_total) throw CacheCorrupt("inconsistent partition counts");
  return h;
}

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

inline std::uint32_t crc32(const unsigned char* data, std::size_t size) {
  boost::crc_32_type crc;
  crc.process_bytes(data, size);
  return crc.checksum();
}

}  // namespace detail

/// Default cache directory: $LAB_CACHE_DIR, else ./.lab-cache.
inline std::filesystem::path cache_dir() {
  if (const char* env = std::getenv("LAB_CACHE_DIR"); env != nullptr && *env != '\0') return env;
  return ".lab-cache";
}

inline std::filesystem::path cache_path(const EnumerationBudget& b, const std::filesystem::path& dir = cache_dir()) {
  return dir / ("mvm1-v" + std::to_string(kInstructionSetVersion) + "-L" + std::to_string(b.max_length) + "-T" +
                std::to_string(b.max_steps) + "-C" + std::to_string(b.output_cap) + ".bin");
}

struct CacheContents {
  CacheHeader header;
  std::vector<ProgramRecord> records;
};

/// Reads and checks a cache file. Throws CacheCorrupt on any inconsistency,
/// including a partially written file unless `allow_partial`.
inline CacheContents read_cache(const std::filesystem::path& path, bool allow_partial = false) {
  const auto data = detail::read_file(path);
  CacheContents c;
  c.header = detail::decode_header(data.data(), data.size());
  if (c.header.isa_version != kInstructionSetVersion) throw CacheCorrupt("instruction set version mismatch");
  if (c.header.format_version != kCacheFormatVersion) throw CacheCorrupt("cache format version mismatch");
  if (!allow_partial && !c.header.complete()) throw CacheCorrupt("cache build incomplete");
  c.header.budget.validate();
  const unsigned char* body = data.data() + kCacheHeaderSize;
  const std::size_t body_size = data.size() - kCacheHeaderSize;
  if (detail::crc32(body, body_size) != c.header.checksum) throw CacheCorrupt("cache checksum mismatch");
  detail::ByteReader rd(body, body_size);
  c.records.reserve(c.header.record_count);
  while (!rd.done()) c.records.push_back(detail::decode_record(rd, c.header.budget));
  if (c.records.size() != c.header.record_count) throw CacheCorrupt("record count mismatch");
  return c;
}

inline CacheHeader cache_info(const std::filesystem::path& path) {
  const auto data = detail::read_file(path);
  return detail::decode_header(data.data(), data.size());
}

struct VerifyReport {
  CacheHeader header;
  std::size_t records = 0;
  bool prefix_free = true;
  bool canonical_order = true;
  double kraft_committed = 0.0;
  double kraft_total = 0.0;
  bool ok() const { return prefix_free && canonical_order && kraft_total <= 1.0; }
};

inline bool program_is_prefix(const ProgramRecord& a, const ProgramRecord& b) {
  if (a.length >= b.length) return false;
  const std::uint32_t mask = a.length == 0 ? 0 : (~std::uint32_t{0} >> (32 - a.length));
  return (a.program & mask) == (b.program & mask);
}

/// Lexicographic program order, a proper prefix first.
inline bool program_less(const ProgramRecord& a, const ProgramRecord& b) {
  const unsigned common = std::min(a.length, b.length);
  for (unsigned i = 0; i < common; ++i)
    if (a.bit(i) != b.bit(i)) return b.bit(i);
  return a.length < b.length;
}

/// Checks the checksum, prefix-freeness and the Kraft sums of a record set.
inline VerifyReport verify_records(const std::vector<ProgramRecord>& recs) {
  VerifyReport v;
  v.records = recs.size();
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const double w = std::ldexp(1.0, -static_cast<int>(recs[i].length));
    v.kraft_total += w;
    if (recs[i].committed()) v.kraft_committed += w;
    if (i + 1 < recs.size()) {
      if (!program_less(recs[i], recs[i + 1])) v.canonical_order = false;
      if (program_is_prefix(recs[i], recs[i + 1])) v.prefix_free = false;
    }
  }
  return v;
}

inline VerifyReport verify_cache(const std::filesystem::path& path) {
  auto c = read_cache(path);
  auto v = verify_records(c.records);
  v.header = c.header;
  return v;
}

struct BuildOptions {
  unsigned split_depth = 8;
  unsigned workers = 0;
  std::size_t batch = 64;  // partitions per header update
  unsigned length_cap = kDefaultLengthCap;
  /// Stop after this many batches (testing interrupted builds); 0 = no limit.
  std::size_t max_batches = 0;
};

/// Builds or resumes the cache at `path`. Returns the header as written.
inline CacheHeader build_cache(const std::filesystem::path& path, const EnumerationBudget& budget,
                               const BuildOptions& opts = {}) {
  budget.validate();
  if (budget.max_length > opts.length_cap) throw BudgetExceeded("2^L exceeds the configured enumeration cap");
  const auto parts = partition_program_space(budget, opts.split_depth);

  CacheHeader h;
  h.budget = budget;
  h.split_depth = opts.split_depth;
  h.partitions_total = static_cast<std::uint32_t>(parts.size());
  boost::crc_32_type crc;

  bool resume = false;
  if (std::filesystem::exists(path)) {
    try {
      auto c = read_cache(path, true);
      if (c.header.budget == budget && c.header.split_depth == opts.split_depth &&
          c.header.partitions_total == h.partitions_total) {
        if (c.header.complete()) return c.header;
        const auto data = detail::read_file(path);
        crc.process_bytes(data.data() + kCacheHeaderSize, data.size() - kCacheHeaderSize);
        h.partitions_done = c.header.partitions_done;
        h.record_count = c.header.record_count;
        resume = true;
      }
    } catch (const CacheCorrupt&) {
      resume = false;
    }
  }
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  if (!resume) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    const auto hb = detail::encode_header(h);
    out.write(reinterpret_cast<const char*>(hb.data()), static_cast<std::streamsize>(hb.size()));
  }

  std::fstream file(path, std::ios::binary | std::ios::in | std::ios::out);
  if (!file) throw IoError("cannot open " + path.string());
  unsigned workers = opts.workers != 0 ? opts.workers : std::max(1U, std::thread::hardware_concurrency());
  std::size_t batches = 0;
  while (h.partitions_done < h.partitions_total) {
    if (opts.max_batches != 0 && batches == opts.max_batches) break;
    const std::size_t begin = h.partitions_done;
    const std::size_t end = std::min<std::size_t>(parts.size(), begin + opts.batch);
    std::vector<std::vector<ProgramRecord>> results(end - begin);
    std::atomic<std::size_t> next{begin};
    auto work = [&] {
      for (std::size_t i = next++; i < end; i = next++) results[i - begin] = expand_partition(parts[i], budget);
    };
    const unsigned w = static_cast<unsigned>(std::min<std::size_t>(workers, end - begin));
    if (w <= 1) {
      work();
    } else {
      std::vector<std::jthread> pool;
      for (unsigned k = 0; k < w; ++k) pool.emplace_back(work);
    }
    detail::ByteWriter bw;
    for (const auto& part : results)
      for (const auto& rec : part) {
        detail::encode_record(rec, bw);
        ++h.record_count;
      }
    crc.process_bytes(bw.bytes.data(), bw.bytes.size());
    file.seekp(0, std::ios::end);
    file.write(reinterpret_cast<const char*>(bw.bytes.data()), static_cast<std::streamsize>(bw.bytes.size()));
    h.partitions_done = static_cast<std::uint32_t>(end);
    h.checksum = crc.checksum();
    const auto hb = detail::encode_header(h);
    file.seekp(0);
    file.write(reinterpret_cast<const char*>(hb.data()), static_cast<std::streamsize>(hb.size()));
    file.flush();
    if (!file) throw IoError("write failed for " + path.string());
    ++batches;
  }
  return h;
}

/// Loads the cache for `budget`, building it first if missing or corrupt.
/// Fresh builds go to a private file that is renamed into place, so
/// concurrent callers never read each other's half-written output.
inline CacheContents load_or_build(const EnumerationBudget& budget, const std::filesystem::path& dir = cache_dir(),
                                   const BuildOptions& opts = {}) {
  const auto path = cache_path(budget, dir);
  for (int attempt = 0; attempt < 2; ++attempt) {
    bool partial = false;
    try {
      if (std::filesystem::exists(path)) {
        auto c = read_cache(path, true);
        if (c.header.complete() && c.header.budget == budget) return c;
        partial = true;
      }
    } catch (const CacheCorrupt&) {
      std::filesystem::remove(path);
    }
    if (partial) {
      build_cache(path, budget, opts);
      continue;
    }
    auto tmp = path;
    tmp += ".tmp-" + std::to_string(std::random_device{}());
    build_cache(tmp, budget, opts);
    std::filesystem::rename(tmp, path);
  }
  return read_cache(path);
}

}  // namespace unipred::solomonoff
