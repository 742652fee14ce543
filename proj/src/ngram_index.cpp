#include "nctk/ngram_index.hpp"

#include <absl/container/flat_hash_map.h>
#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#define XXH_INLINE_ALL
#include <xxhash.h>

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <exception>
#include <fstream>
#include <mutex>
#include <queue>
#include <sstream>
#include <thread>

#include "nctk/digest.hpp"
#include "nctk/errors.hpp"

namespace nctk {
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config and small types

void NGramConfig::validate() {
  std::sort(n_values.begin(), n_values.end());
  n_values.erase(std::unique(n_values.begin(), n_values.end()), n_values.end());
  if (n_values.empty()) throw UsageError("ngram config: no n values");
  if (n_values.front() < 1) throw UsageError("ngram config: every n must be >= 1");
  if (n_values.back() > 64) throw UsageError("ngram config: n must be <= 64");
  if (cap < 6) throw UsageError("ngram config: cap must be >= 6 so 5+ stays distinguishable");
}

bool NGramConfig::has_n(int n) const {
  return std::find(n_values.begin(), n_values.end(), n) != n_values.end();
}

int NGramConfig::max_n() const { return n_values.empty() ? 0 : n_values.back(); }

std::string NGramConfig::describe() const {
  std::string out = "n=";
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(n_values[i]);
  }
  out += ";cap=" + std::to_string(cap);
  return out;
}

std::string_view bucket_name(CountBucket b) {
  switch (b) {
    case CountBucket::kZero:
      return "0";
    case CountBucket::kLow:
      return "1-5";
    case CountBucket::kHigh:
      return "5+";
  }
  return "?";
}

NGram::NGram(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.empty()) throw UsageError("ngram: empty token tuple");
  for (const auto& t : tokens_) {
    if (t.empty()) throw UsageError("ngram: empty token");
    for (unsigned char c : t) {
      if (c <= 0x20 || c == 0x7F) throw UsageError("ngram: token contains whitespace: '" + t + "'");
    }
  }
}

std::string NGram::key() const {
  std::string out;
  for (const auto& t : tokens_) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

namespace {

constexpr char kTableMagic[8] = {'N', 'C', 'T', 'K', 'N', 'G', 'T', '\0'};
constexpr char kFooterMagic[8] = {'N', 'C', 'T', 'K', 'E', 'N', 'D', '\0'};
constexpr char kRunMagic[8] = {'N', 'C', 'T', 'K', 'R', 'U', 'N', '\0'};
constexpr std::size_t kHeaderSize = 32;
constexpr std::size_t kFooterSize = 24;
constexpr std::uint32_t kRecordsPerBlock = 32;

std::uint64_t gram_hash(std::string_view key) { return XXH3_64bits(key.data(), key.size()); }

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.append(b, 4);
}

void put_u64(std::string& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.append(b, 8);
}

void put_varint(std::string& out, std::uint64_t v) {
  char b[10];
  int n = 0;
  while (v >= 0x80) {
    b[n++] = static_cast<char>((v & 0x7F) | 0x80);
    v >>= 7;
  }
  b[n++] = static_cast<char>(v);
  out.append(b, static_cast<std::size_t>(n));
}

std::uint64_t load_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint32_t load_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

// Decodes a varint at p (bounded by end); returns the position after it.
const unsigned char* get_varint(const unsigned char* p, const unsigned char* end,
                                std::uint64_t& v) {
  v = 0;
  for (int shift = 0; p < end && shift < 64; shift += 7) {
    const unsigned char b = *p++;
    v |= static_cast<std::uint64_t>(b & 0x7F) << shift;
    if ((b & 0x80) == 0) return p;
  }
  throw DataError("ngram index: truncated varint");
}

// Append-only binary file with a large write buffer.
class OutFile {
 public:
  explicit OutFile(const fs::path& path) : path_(path) {
    f_ = std::fopen(path.c_str(), "wb");
    if (f_ == nullptr) {
      throw DataError("cannot write " + path.string() + ": " + std::strerror(errno));
    }
    buf_.reserve(kFlushAt + 4096);
  }
  ~OutFile() {
    if (f_ != nullptr) std::fclose(f_);
  }
  OutFile(const OutFile&) = delete;
  OutFile& operator=(const OutFile&) = delete;

  std::string& buffer() { return buf_; }
  std::uint64_t offset() const { return written_ + buf_.size(); }

  void maybe_flush() {
    if (buf_.size() >= kFlushAt) flush();
  }

  void flush() {
    if (buf_.empty()) return;
    if (std::fwrite(buf_.data(), 1, buf_.size(), f_) != buf_.size()) fail();
    written_ += buf_.size();
    buf_.clear();
  }

  void patch(std::uint64_t at, std::string_view bytes) {
    flush();
    if (std::fseek(f_, static_cast<long>(at), SEEK_SET) != 0) fail();
    if (std::fwrite(bytes.data(), 1, bytes.size(), f_) != bytes.size()) fail();
    if (std::fseek(f_, 0, SEEK_END) != 0) fail();
  }

  void close() {
    flush();
    if (std::fclose(f_) != 0) {
      f_ = nullptr;
      fail();
    }
    f_ = nullptr;
  }

 private:
  static constexpr std::size_t kFlushAt = std::size_t{1} << 20;

  [[noreturn]] void fail() {
    throw DataError("cannot write " + path_.string() + ": " + std::strerror(errno));
  }

  fs::path path_;
  std::FILE* f_ = nullptr;
  std::string buf_;
  std::uint64_t written_ = 0;
};

// Sequential reader of a sorted spill run.
class RunCursor {
 public:
  explicit RunCursor(const fs::path& path) : path_(path), buf_(std::size_t{1} << 18) {
    f_ = std::fopen(path.c_str(), "rb");
    if (f_ == nullptr) throw DataError("cannot read run " + path.string());
    char magic[8];
    if (std::fread(magic, 1, 8, f_) != 8 || std::memcmp(magic, kRunMagic, 8) != 0) {
      throw DataError("corrupt run file " + path.string());
    }
    advance();
  }
  ~RunCursor() {
    if (f_ != nullptr) std::fclose(f_);
  }
  RunCursor(const RunCursor&) = delete;
  RunCursor& operator=(const RunCursor&) = delete;

  bool valid() const { return valid_; }
  std::uint64_t hash() const { return hash_; }
  std::string_view key() const { return key_; }
  std::uint32_t count() const { return count_; }

  void advance() {
    if (!ensure(8)) {
      valid_ = false;
      return;
    }
    hash_ = load_u64(data());
    pos_ += 8;
    const std::uint64_t len = read_varint();
    if (!ensure(len)) throw DataError("truncated run file " + path_.string());
    key_.assign(reinterpret_cast<const char*>(data()), len);
    pos_ += len;
    count_ = static_cast<std::uint32_t>(read_varint());
    valid_ = true;
  }

 private:
  const unsigned char* data() const {
    return reinterpret_cast<const unsigned char*>(buf_.data()) + pos_;
  }

  bool ensure(std::size_t n) {
    if (len_ - pos_ >= n) return true;
    std::memmove(buf_.data(), buf_.data() + pos_, len_ - pos_);
    len_ -= pos_;
    pos_ = 0;
    if (buf_.size() < n) buf_.resize(n);
    len_ += std::fread(buf_.data() + len_, 1, buf_.size() - len_, f_);
    return len_ >= n;
  }

  std::uint64_t read_varint() {
    if (!ensure(10)) {
      if (len_ == pos_) throw DataError("truncated run file " + path_.string());
    }
    std::uint64_t v = 0;
    const unsigned char* p = data();
    const unsigned char* after = get_varint(p, p + (len_ - pos_), v);
    pos_ += static_cast<std::size_t>(after - p);
    return v;
  }

  fs::path path_;
  std::FILE* f_ = nullptr;
  std::vector<char> buf_;
  std::size_t pos_ = 0;
  std::size_t len_ = 0;
  bool valid_ = false;
  std::uint64_t hash_ = 0;
  std::string key_;
  std::uint32_t count_ = 0;
};

// ---------------------------------------------------------------------------
// In-memory counting with spill to sorted runs.

struct GramRef {
  const char* data;
  std::uint32_t len;
  std::uint64_t hash;
};

struct GramRefHash {
  std::size_t operator()(const GramRef& g) const { return static_cast<std::size_t>(g.hash); }
};

struct GramRefEq {
  bool operator()(const GramRef& a, const GramRef& b) const {
    return a.hash == b.hash && a.len == b.len && std::memcmp(a.data, b.data, a.len) == 0;
  }
};

using CountTable = absl::flat_hash_map<GramRef, std::uint32_t, GramRefHash, GramRefEq>;

class Arena {
 public:
  char* alloc(std::size_t n) {
    if (chunks_.empty() || used_ + n > chunk_size_) {
      const std::size_t size = std::max(chunk_size_, n);
      chunks_.push_back(std::make_unique<char[]>(size));
      used_ = 0;
      reserved_ += size;
    }
    char* p = chunks_.back().get() + used_;
    used_ += n;
    return p;
  }
  void reset() {
    chunks_.clear();
    used_ = 0;
    reserved_ = 0;
  }
  std::size_t reserved() const { return reserved_; }

 private:
  static constexpr std::size_t chunk_size_ = std::size_t{4} << 20;
  std::vector<std::unique_ptr<char[]>> chunks_;
  std::size_t used_ = 0;
  std::size_t reserved_ = 0;
};

struct SortRec {
  std::uint64_t hash;
  const char* data;
  std::uint32_t len;
  std::uint32_t count;
};

struct RecLess {
  bool operator()(const SortRec& a, const SortRec& b) const {
    if (a.hash != b.hash) return a.hash < b.hash;
    const int c = std::memcmp(a.data, b.data, std::min(a.len, b.len));
    return c != 0 ? c < 0 : a.len < b.len;
  }
};

class GramCounter {
 public:
  GramCounter(const NGramConfig& config, std::size_t budget, fs::path scratch, std::string tag)
      : config_(config), budget_(budget), scratch_(std::move(scratch)), tag_(std::move(tag)) {
    tables_.resize(config_.n_values.size());
    runs_.resize(config_.n_values.size());
  }

  void add(const TokenBuffer& buf) {
    const std::size_t size = buf.size();
    for (std::size_t t = 0; t < config_.n_values.size(); ++t) {
      const auto n = static_cast<std::size_t>(config_.n_values[t]);
      if (size < n) continue;
      CountTable& table = tables_[t];
      for (std::size_t i = 0; i + n <= size; ++i) {
        const std::string_view key = buf.window(i, n);
        const GramRef probe{key.data(), static_cast<std::uint32_t>(key.size()), gram_hash(key)};
        auto it = table.lazy_emplace(probe, [&](const CountTable::constructor& ctor) {
          char* p = arena_.alloc(key.size());
          std::memcpy(p, key.data(), key.size());
          ctor(GramRef{p, probe.len, probe.hash}, 0u);
        });
        if (it->second < config_.cap) ++it->second;
      }
    }
    if (memory_in_use() > budget_) spill();
  }

  std::size_t memory_in_use() const {
    std::size_t bytes = arena_.reserved();
    for (const auto& t : tables_) bytes += t.capacity() * (sizeof(CountTable::slot_type) + 1);
    return bytes;
  }

  void spill() {
    for (std::size_t t = 0; t < tables_.size(); ++t) {
      CountTable& table = tables_[t];
      if (table.empty()) continue;
      std::vector<SortRec> recs;
      recs.reserve(table.size());
      for (const auto& [ref, count] : table) recs.push_back({ref.hash, ref.data, ref.len, count});
      std::sort(recs.begin(), recs.end(), RecLess{});

      fs::path path = scratch_ / (tag_ + "-n" + std::to_string(config_.n_values[t]) + "-" +
                                  std::to_string(runs_[t].size()) + ".run");
      OutFile out(path);
      out.buffer().append(kRunMagic, 8);
      for (const SortRec& r : recs) {
        std::string& b = out.buffer();
        put_u64(b, r.hash);
        put_varint(b, r.len);
        b.append(r.data, r.len);
        put_varint(b, r.count);
        out.maybe_flush();
      }
      out.close();
      runs_[t].push_back(std::move(path));
      CountTable().swap(table);
    }
    arena_.reset();
  }

  // Spills whatever is left and hands over the runs, indexed like n_values.
  std::vector<std::vector<fs::path>> finish() {
    spill();
    return std::move(runs_);
  }

 private:
  const NGramConfig& config_;
  std::size_t budget_;
  fs::path scratch_;
  std::string tag_;
  Arena arena_;
  std::vector<CountTable> tables_;
  std::vector<std::vector<fs::path>> runs_;
};

std::string table_file_name(int n) { return std::to_string(n) + "gram.tbl"; }

// k-way merge of sorted runs into a final table; returns the record count.
std::uint64_t merge_runs(const std::vector<fs::path>& runs, int n, std::uint32_t cap,
                         const fs::path& out_path) {
  std::vector<std::unique_ptr<RunCursor>> cursors;
  cursors.reserve(runs.size());
  for (const auto& r : runs) {
    auto c = std::make_unique<RunCursor>(r);
    if (c->valid()) cursors.push_back(std::move(c));
  }
  auto greater = [&cursors](std::size_t a, std::size_t b) {
    const RunCursor& x = *cursors[a];
    const RunCursor& y = *cursors[b];
    if (x.hash() != y.hash()) return x.hash() > y.hash();
    return x.key() > y.key();
  };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(greater)> heap(greater);
  for (std::size_t i = 0; i < cursors.size(); ++i) heap.push(i);

  OutFile out(out_path);
  {
    std::string& b = out.buffer();
    b.append(kTableMagic, 8);
    put_u32(b, static_cast<std::uint32_t>(NGramIndex::kFormatVersion));
    put_u32(b, static_cast<std::uint32_t>(n));
    put_u32(b, cap);
    put_u32(b, kRecordsPerBlock);
    put_u64(b, 0);  // record count, patched below
  }

  std::vector<std::pair<std::uint64_t, std::uint64_t>> blocks;
  std::uint64_t records = 0;
  std::string key;
  std::uint64_t hash = 0;
  std::uint64_t total = 0;
  bool have = false;

  auto emit = [&]() {
    if (records % kRecordsPerBlock == 0) blocks.emplace_back(hash, out.offset());
    std::string& b = out.buffer();
    put_varint(b, key.size());
    b.append(key);
    put_varint(b, std::min<std::uint64_t>(total, cap));
    out.maybe_flush();
    ++records;
  };

  while (!heap.empty()) {
    const std::size_t top = heap.top();
    heap.pop();
    RunCursor& c = *cursors[top];
    if (have && c.hash() == hash && c.key() == key) {
      total += c.count();
    } else {
      if (have) emit();
      hash = c.hash();
      key.assign(c.key());
      total = c.count();
      have = true;
    }
    c.advance();
    if (c.valid()) heap.push(top);
  }
  if (have) emit();

  const std::uint64_t index_offset = out.offset();
  for (const auto& [first_hash, offset] : blocks) {
    std::string& b = out.buffer();
    put_u64(b, first_hash);
    put_u64(b, offset);
    out.maybe_flush();
  }
  {
    std::string& b = out.buffer();
    put_u64(b, index_offset);
    put_u64(b, blocks.size());
    b.append(kFooterMagic, 8);
  }
  std::string count_bytes;
  put_u64(count_bytes, records);
  out.patch(24, count_bytes);
  out.close();
  return records;
}

std::string fingerprint_from_digests(const NGramConfig& config,
                                     const std::vector<std::string>& digests) {
  Sha256 h;
  h.update("nctk-ngram-index/" + std::to_string(NGramIndex::kFormatVersion) + "\n");
  h.update(config.describe());
  h.update("\n");
  for (const auto& d : digests) {
    h.update(d);
    h.update("\n");
  }
  return h.hex_digest();
}

std::string shard_digest(const fs::path& shard) {
  ShardReader reader(shard);
  Sha256 h;
  std::string line;
  while (reader.next_line(line)) {
    h.update(line);
    h.update("\n");
  }
  return h.hex_digest();
}

void write_metadata(const fs::path& dir, const NGramConfig& config, const std::string& fingerprint,
                    const BuildSummary& summary, const std::vector<std::uint64_t>& records) {
  nlohmann::ordered_json meta;
  meta["format"] = "nctk-ngram-index";
  meta["format_version"] = NGramIndex::kFormatVersion;
  meta["n_values"] = config.n_values;
  meta["cap"] = config.cap;
  meta["fingerprint"] = fingerprint;
  meta["documents"] = summary.documents;
  meta["malformed_lines"] = summary.malformed_lines;
  meta["tables"] = nlohmann::ordered_json::array();
  for (std::size_t t = 0; t < config.n_values.size(); ++t) {
    nlohmann::ordered_json entry;
    entry["n"] = config.n_values[t];
    entry["file"] = table_file_name(config.n_values[t]);
    entry["records"] = records[t];
    meta["tables"].push_back(entry);
  }
  std::ofstream out(dir / std::string(NGramIndex::kMetaFile), std::ios::binary | std::ios::trunc);
  out << meta.dump(2) << '\n';
  if (!out) throw DataError("cannot write index metadata in " + dir.string());
}

fs::path prepare_output(const fs::path& output, const BuildOptions& options) {
  std::error_code ec;
  fs::create_directories(output, ec);
  if (ec) throw DataError("cannot create index directory " + output.string() + ": " + ec.message());
  fs::path scratch = options.scratch_dir.empty() ? output / ".scratch" : options.scratch_dir;
  fs::remove_all(scratch, ec);
  fs::create_directories(scratch, ec);
  if (ec) throw DataError("cannot create scratch directory " + scratch.string() + ": " + ec.message());
  return scratch;
}

NGramIndex finalize(const fs::path& output, const fs::path& scratch, const NGramConfig& config,
                    std::vector<std::vector<std::vector<fs::path>>> worker_runs,
                    const std::string& fingerprint, BuildSummary& summary) {
  std::vector<std::uint64_t> records(config.n_values.size(), 0);
  for (std::size_t t = 0; t < config.n_values.size(); ++t) {
    std::vector<fs::path> runs;
    for (auto& w : worker_runs) {
      for (auto& r : w[t]) runs.push_back(std::move(r));
    }
    summary.spilled_runs += runs.size();
    records[t] = merge_runs(runs, config.n_values[t], config.cap,
                            output / table_file_name(config.n_values[t]));
    for (const auto& r : runs) fs::remove(r);
  }
  write_metadata(output, config, fingerprint, summary, records);
  std::error_code ec;
  fs::remove_all(scratch, ec);
  return NGramIndex::open(output);
}

// ---------------------------------------------------------------------------
// Reader

class MappedFile {
 public:
  explicit MappedFile(const fs::path& path) {
    int fd = ::open(path.c_str(), O_RDONLY);
    if (fd < 0) throw DataError("cannot open " + path.string() + ": " + std::strerror(errno));
    struct stat st {};
    if (::fstat(fd, &st) != 0) {
      ::close(fd);
      throw DataError("cannot stat " + path.string());
    }
    size_ = static_cast<std::size_t>(st.st_size);
    if (size_ > 0) {
      void* p = ::mmap(nullptr, size_, PROT_READ, MAP_SHARED, fd, 0);
      if (p == MAP_FAILED) {
        ::close(fd);
        throw DataError("cannot map " + path.string() + ": " + std::strerror(errno));
      }
      ::madvise(p, size_, MADV_RANDOM);
      data_ = static_cast<const unsigned char*>(p);
    }
    ::close(fd);
  }
  ~MappedFile() {
    if (data_ != nullptr) ::munmap(const_cast<unsigned char*>(data_), size_);
  }
  MappedFile(const MappedFile&) = delete;
  MappedFile& operator=(const MappedFile&) = delete;

  const unsigned char* data() const { return data_; }
  std::size_t size() const { return size_; }

 private:
  const unsigned char* data_ = nullptr;
  std::size_t size_ = 0;
};

struct Table {
  int n = 0;
  std::unique_ptr<MappedFile> file;
  std::uint64_t records = 0;
  std::uint64_t index_offset = 0;
  std::uint64_t blocks = 0;

  std::uint64_t block_hash(std::uint64_t b) const {
    return load_u64(file->data() + index_offset + b * 16);
  }
  std::uint64_t block_offset(std::uint64_t b) const {
    return load_u64(file->data() + index_offset + b * 16 + 8);
  }
  std::uint64_t block_end(std::uint64_t b) const {
    return b + 1 < blocks ? block_offset(b + 1) : index_offset;
  }

  // First block whose first hash is >= h, or `blocks`. Hashes are uniform,
  // so interpolation lands within a few probes; bisection bounds the worst case.
  std::uint64_t first_block_at_or_after(std::uint64_t h) const {
    std::uint64_t lo = 0;
    std::uint64_t hi = blocks - 1;
    if (block_hash(hi) < h) return blocks;
    if (block_hash(lo) >= h) return 0;
    // block_hash(lo) < h <= block_hash(hi)
    for (int step = 0; hi - lo > 1; ++step) {
      std::uint64_t mid = lo + (hi - lo) / 2;
      if (step < 6) {
        const std::uint64_t hl = block_hash(lo);
        const std::uint64_t hh = block_hash(hi);
        const auto frac = static_cast<unsigned __int128>(h - hl) * (hi - lo) / (hh - hl);
        mid = std::clamp<std::uint64_t>(lo + static_cast<std::uint64_t>(frac), lo + 1, hi - 1);
      }
      if (block_hash(mid) < h) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return hi;
  }
};

Table open_table(const fs::path& path, int n, std::uint32_t cap) {
  Table t;
  t.n = n;
  t.file = std::make_unique<MappedFile>(path);
  const unsigned char* d = t.file->data();
  const std::size_t size = t.file->size();
  if (size < kHeaderSize + kFooterSize || std::memcmp(d, kTableMagic, 8) != 0) {
    throw DataError("not an n-gram table: " + path.string());
  }
  const std::uint32_t version = load_u32(d + 8);
  if (version != static_cast<std::uint32_t>(NGramIndex::kFormatVersion)) {
    throw DataError("unsupported n-gram table version " + std::to_string(version) + " in " +
                    path.string());
  }
  if (load_u32(d + 12) != static_cast<std::uint32_t>(n) || load_u32(d + 16) != cap) {
    throw DataError("n-gram table " + path.string() + " does not match index metadata");
  }
  t.records = load_u64(d + 24);
  const unsigned char* footer = d + size - kFooterSize;
  if (std::memcmp(footer + 16, kFooterMagic, 8) != 0) {
    throw DataError("truncated n-gram table " + path.string());
  }
  t.index_offset = load_u64(footer);
  t.blocks = load_u64(footer + 8);
  if (t.index_offset + t.blocks * 16 + kFooterSize != size) {
    throw DataError("corrupt block index in " + path.string());
  }
  return t;
}

}  // namespace

struct NGramIndex::Impl {
  fs::path dir;
  NGramConfig config;
  std::string fingerprint;
  std::vector<Table> tables;  // indexed like config.n_values

  const Table& table_for(int n) const {
    for (const auto& t : tables) {
      if (t.n == n) return t;
    }
    throw UsageError("ngram index: n=" + std::to_string(n) + " is not configured (" +
                     config.describe() + ")");
  }
};

NGramIndex::NGramIndex(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
NGramIndex::NGramIndex(NGramIndex&&) noexcept = default;
NGramIndex& NGramIndex::operator=(NGramIndex&&) noexcept = default;
NGramIndex::~NGramIndex() = default;

NGramIndex NGramIndex::open(const fs::path& dir) {
  const fs::path meta_path = dir / std::string(kMetaFile);
  std::ifstream in(meta_path);
  if (!in) throw DataError("no n-gram index at " + dir.string() + " (missing index.json)");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("corrupt index metadata " + meta_path.string() + ": " + e.what());
  }
  if (meta.value("format", "") != "nctk-ngram-index") {
    throw DataError(meta_path.string() + " is not an nctk n-gram index");
  }
  if (meta.value("format_version", -1) != kFormatVersion) {
    throw DataError("unsupported index format version in " + meta_path.string());
  }
  auto impl = std::make_unique<Impl>();
  impl->dir = dir;
  try {
    impl->config.n_values = meta.at("n_values").get<std::vector<int>>();
    impl->config.cap = meta.at("cap").get<std::uint32_t>();
    impl->fingerprint = meta.at("fingerprint").get<std::string>();
    impl->config.validate();
    for (const auto& entry : meta.at("tables")) {
      const int n = entry.at("n").get<int>();
      Table t = open_table(dir / entry.at("file").get<std::string>(), n, impl->config.cap);
      if (t.records != entry.at("records").get<std::uint64_t>()) {
        throw DataError("record count mismatch for n=" + std::to_string(n) + " in " + dir.string());
      }
      impl->tables.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("corrupt index metadata " + meta_path.string() + ": " + e.what());
  } catch (const UsageError& e) {
    throw DataError("corrupt index metadata " + meta_path.string() + ": " + e.what());
  }
  if (impl->tables.size() != impl->config.n_values.size()) {
    throw DataError("index metadata lists the wrong number of tables in " + dir.string());
  }
  return NGramIndex(std::move(impl));
}

const NGramConfig& NGramIndex::config() const { return impl_->config; }
const std::string& NGramIndex::fingerprint() const { return impl_->fingerprint; }
const fs::path& NGramIndex::directory() const { return impl_->dir; }

std::uint64_t NGramIndex::record_count(int n) const { return impl_->table_for(n).records; }

std::uint32_t NGramIndex::count(const NGram& gram) const {
  return count_joined(gram.key(), static_cast<int>(gram.size()));
}

std::uint32_t NGramIndex::count(std::span<const std::string> tokens) const {
  std::string joined;
  for (const auto& t : tokens) {
    if (!joined.empty()) joined.push_back(' ');
    joined += t;
  }
  return count_joined(joined, static_cast<int>(tokens.size()));
}

std::uint32_t NGramIndex::count_joined(std::string_view joined, int n) const {
  const Table& t = impl_->table_for(n);
  if (t.blocks == 0) return 0;
  const std::uint64_t h = gram_hash(joined);

  const std::uint64_t first = t.first_block_at_or_after(h);
  // the key may also sit at the tail of the block before
  const std::uint64_t start = first == 0 ? 0 : first - 1;
  if (t.block_hash(start) > h) return 0;

  const unsigned char* base = t.file->data();
  for (std::uint64_t b = start; b < t.blocks; ++b) {
    if (b > start && t.block_hash(b) > h) break;
    const unsigned char* p = base + t.block_offset(b);
    const unsigned char* end = base + t.block_end(b);
    while (p < end) {
      std::uint64_t len = 0;
      std::uint64_t cnt = 0;
      p = get_varint(p, end, len);
      const unsigned char* key = p;
      p += len;
      p = get_varint(p, end, cnt);
      if (len == joined.size() && std::memcmp(key, joined.data(), len) == 0) {
        return static_cast<std::uint32_t>(cnt);
      }
    }
  }
  return 0;
}

void NGramIndex::for_each(int n,
                          const std::function<void(std::string_view, std::uint32_t)>& fn) const {
  const Table& t = impl_->table_for(n);
  const unsigned char* p = t.file->data() + kHeaderSize;
  const unsigned char* end = t.file->data() + t.index_offset;
  while (p < end) {
    std::uint64_t len = 0;
    std::uint64_t cnt = 0;
    p = get_varint(p, end, len);
    std::string_view key(reinterpret_cast<const char*>(p), len);
    p += len;
    p = get_varint(p, end, cnt);
    fn(key, static_cast<std::uint32_t>(cnt));
  }
}

// ---------------------------------------------------------------------------
// Build

std::string compute_fingerprint(const CorpusManifest& manifest, const NGramConfig& config) {
  NGramConfig c = config;
  c.validate();
  std::vector<std::string> digests;
  digests.reserve(manifest.shards.size());
  for (const auto& shard : manifest.shards) digests.push_back(shard_digest(shard));
  return fingerprint_from_digests(c, digests);
}

std::string compute_fingerprint(std::span<const Document> documents, const NGramConfig& config) {
  NGramConfig c = config;
  c.validate();
  Sha256 h;
  for (const auto& d : documents) {
    h.update(d.text);
    h.update("\n");
  }
  return fingerprint_from_digests(c, {h.hex_digest()});
}

NGramIndex build_index(const CorpusManifest& manifest, NGramConfig config, const fs::path& output,
                       const BuildOptions& options, BuildSummary* summary_out) {
  config.validate();
  const fs::path scratch = prepare_output(output, options);
  const std::size_t shard_count = manifest.shards.size();
  const unsigned workers =
      static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(options.threads, shard_count)));
  const std::size_t budget = std::max<std::size_t>(options.memory_budget / workers, std::size_t{1} << 20);

  std::vector<std::string> digests(shard_count);
  std::vector<std::vector<std::vector<fs::path>>> worker_runs(workers);
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  BuildSummary summary;
  std::exception_ptr failure;

  auto work = [&](unsigned w) {
    try {
      GramCounter counter(config, budget, scratch, "w" + std::to_string(w));
      Tokenizer tokenizer;
      TokenBuffer buf;
      for (std::size_t s = next++; s < shard_count; s = next++) {
        ShardStats st = read_shard(
            manifest.shards[s], s,
            [&](const Document& doc) {
              tokenizer.normalize_into(doc.text, buf);
              counter.add(buf);
            },
            &digests[s]);
        std::lock_guard lock(mu);
        summary.documents += st.documents;
        summary.malformed_lines += st.malformed;
        summary.bytes += st.bytes;
      }
      worker_runs[w] = counter.finish();
    } catch (...) {
      std::lock_guard lock(mu);
      if (!failure) failure = std::current_exception();
      next = shard_count;
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  if (failure) {
    std::error_code ec;
    fs::remove_all(scratch, ec);
    std::rethrow_exception(failure);
  }
  for (auto& runs : worker_runs) {
    if (runs.empty()) runs.resize(config.n_values.size());
  }

  const std::string fingerprint = fingerprint_from_digests(config, digests);
  NGramIndex index = finalize(output, scratch, config, std::move(worker_runs), fingerprint, summary);
  if (summary_out != nullptr) *summary_out = summary;
  return index;
}

NGramIndex build_index(std::span<const Document> documents, NGramConfig config,
                       const fs::path& output, const BuildOptions& options,
                       BuildSummary* summary_out) {
  config.validate();
  const fs::path scratch = prepare_output(output, options);
  BuildSummary summary;
  std::vector<std::vector<std::vector<fs::path>>> worker_runs(1);
  {
    GramCounter counter(config, std::max<std::size_t>(options.memory_budget, std::size_t{1} << 20),
                        scratch, "w0");
    Tokenizer tokenizer;
    TokenBuffer buf;
    for (const auto& doc : documents) {
      tokenizer.normalize_into(doc.text, buf);
      counter.add(buf);
      ++summary.documents;
      summary.bytes += doc.text.size() + 1;
    }
    worker_runs[0] = counter.finish();
  }
  const std::string fingerprint = compute_fingerprint(documents, config);
  NGramIndex index = finalize(output, scratch, config, std::move(worker_runs), fingerprint, summary);
  if (summary_out != nullptr) *summary_out = summary;
  return index;
}

}  // namespace nctk
