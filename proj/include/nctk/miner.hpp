#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "nctk/corpus_io.hpp"
#include "nctk/dataset.hpp"

namespace nctk {

class WordNetKB;

enum class CandidateFlag { kNamedEntity, kSpelling, kLargerExpression };
std::string_view to_string(CandidateFlag f);  // "named_entity", "spelling", "larger_expression"

struct NCCandidate {
  NounCompound nc;                  // lemmatized constituents
  std::uint64_t corpus_frequency = 0;  // exact occurrences in the mined corpus
  std::set<CandidateFlag> flags;
  std::optional<std::uint64_t> reference_count;  // set by filter_by_frequency

  friend bool operator==(const NCCandidate&, const NCCandidate&) = default;
};

struct MinerOptions {
  std::set<std::string> stopwords = default_stopwords();
  // Spelling check: a token absent from this list and not itself a KB lemma
  // is suspicious. Without a list no spelling flags are raised.
  std::optional<std::set<std::string>> wordlist;
  // A bigram seen at least this often whose occurrences are more than this
  // share inside one trigram (same word on the left, or on the right) is
  // flagged as part of a larger expression. Punctuation is not a neighbour.
  double larger_expression_share = 0.9;
  std::uint64_t larger_expression_min_count = 5;
  double named_entity_share = 0.5;

  static std::set<std::string> default_stopwords();
};

// Accumulates bigram statistics. Counters over disjoint document sets merge
// associatively, so shards may be processed in any order.
class CandidateCounter {
 public:
  CandidateCounter(const WordNetKB& kb, const MinerOptions& options);
  ~CandidateCounter();
  CandidateCounter(CandidateCounter&&) noexcept;
  CandidateCounter& operator=(CandidateCounter&&) noexcept;

  void add(std::string_view raw_text);
  void merge(CandidateCounter&& other);

  // Sorted by compound.
  std::vector<NCCandidate> candidates() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::vector<NCCandidate> extract_candidates(std::span<const Document> docs, const WordNetKB& kb,
                                            const MinerOptions& options = {});
std::vector<NCCandidate> extract_candidates(const CorpusManifest& manifest, const WordNetKB& kb,
                                            const MinerOptions& options = {}, unsigned threads = 1);

using ReferenceCounts = std::function<std::uint64_t(const NounCompound&)>;

// Keeps unflagged candidates with reference count <= max_freq, ascending by
// count then compound. take_k truncates after sorting.
std::vector<NCCandidate> filter_by_frequency(std::span<const NCCandidate> candidates,
                                             const ReferenceCounts& reference_counts,
                                             std::int64_t max_freq,
                                             std::optional<std::size_t> take_k = std::nullopt);

// "compound<TAB>count" lines, '#' comments allowed. Absent compounds count 0.
ReferenceCounts load_count_table(const std::filesystem::path& file);

// Header line then one row per candidate:
// nc, corpus_frequency, reference_count (blank if unset), flags (comma-separated).
std::string candidates_tsv(std::span<const NCCandidate> candidates);

// Candidates as dataset entries with empty paraphrase lists.
std::vector<DatasetEntry> candidates_as_entries(std::span<const NCCandidate> candidates, Split split);

}  // namespace nctk
