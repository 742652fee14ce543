#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nctk/corpus_io.hpp"

namespace nctk {

// Window sizes to index and the saturation ceiling for stored counts.
struct NGramConfig {
  std::vector<int> n_values{3, 4, 5};
  std::uint32_t cap = 6;

  // Sorts and deduplicates n_values; throws UsageError when n < 1, cap < 6,
  // or no n is configured.
  void validate();
  bool has_n(int n) const;
  int max_n() const;
  std::string describe() const;  // "n=3,4,5;cap=6"
};

// Frequency class of an n-gram: 0, 1-5, more than 5. Five counts as LOW.
enum class CountBucket { kZero, kLow, kHigh };

constexpr CountBucket bucket_of(std::uint64_t count) {
  if (count == 0) return CountBucket::kZero;
  if (count <= 5) return CountBucket::kLow;
  return CountBucket::kHigh;
}

std::string_view bucket_name(CountBucket b);  // "0", "1-5", "5+"
inline constexpr CountBucket kAllBuckets[] = {CountBucket::kZero, CountBucket::kLow,
                                              CountBucket::kHigh};

// A token tuple checked against the TokenSeq token invariants.
class NGram {
 public:
  explicit NGram(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::string key() const;  // tokens joined by single spaces

  friend bool operator==(const NGram&, const NGram&) = default;

 private:
  std::vector<std::string> tokens_;
};

struct BuildOptions {
  unsigned threads = 1;
  // Upper bound on in-memory counting tables across all workers before they
  // spill sorted runs to disk.
  std::size_t memory_budget = std::size_t{512} << 20;
  // Defaults to "<output>/.scratch"; removed when the build finishes.
  std::filesystem::path scratch_dir;
};

struct BuildSummary {
  std::size_t documents = 0;
  std::size_t malformed_lines = 0;
  std::uint64_t bytes = 0;
  std::size_t spilled_runs = 0;
};

// Read-only view of a built index directory. Immutable and safe to share
// between threads.
class NGramIndex {
 public:
  static constexpr int kFormatVersion = 1;
  static constexpr std::string_view kMetaFile = "index.json";

  static NGramIndex open(const std::filesystem::path& dir);

  NGramIndex(NGramIndex&&) noexcept;
  NGramIndex& operator=(NGramIndex&&) noexcept;
  ~NGramIndex();

  const NGramConfig& config() const;
  const std::string& fingerprint() const;
  const std::filesystem::path& directory() const;

  // Saturated corpus count in [0, cap]. The gram length must be configured.
  std::uint32_t count(const NGram& gram) const;
  std::uint32_t count(std::span<const std::string> tokens) const;
  // `joined` is `n` tokens separated by single spaces.
  std::uint32_t count_joined(std::string_view joined, int n) const;

  std::uint64_t record_count(int n) const;

  // Visits every stored n-gram of length n in table order.
  void for_each(int n, const std::function<void(std::string_view key, std::uint32_t count)>& fn) const;

 private:
  struct Impl;
  explicit NGramIndex(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

// Content fingerprint of a corpus under a config: changes iff a shard's line
// content, the shard order, or the config changes.
std::string compute_fingerprint(const CorpusManifest& manifest, const NGramConfig& config);
std::string compute_fingerprint(std::span<const Document> documents, const NGramConfig& config);

// Builds from a manifest, one worker per shard at a time. The output is
// byte-identical for the same manifest content and config regardless of
// thread count or memory budget.
NGramIndex build_index(const CorpusManifest& manifest, NGramConfig config,
                       const std::filesystem::path& output, const BuildOptions& options = {},
                       BuildSummary* summary = nullptr);

// Builds from an in-memory document sequence (single worker).
NGramIndex build_index(std::span<const Document> documents, NGramConfig config,
                       const std::filesystem::path& output, const BuildOptions& options = {},
                       BuildSummary* summary = nullptr);

}  // namespace nctk
