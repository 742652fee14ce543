#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "nctk/corpus_io.hpp"
#include "nctk/dataset.hpp"
#include "nctk/ngram_index.hpp"

namespace nctk {

// Every window of n consecutive tokens, in order, repeats included.
std::vector<NGram> extract_ngrams(const TokenSeq& tokens, int n);

struct LabeledParaphrase {
  std::string text;
  Label label = Label::kUnjudged;
  std::string test_set;
};

struct OverlapGroup {
  std::string test_set;
  Label label = Label::kCorrect;
  int n = 0;

  friend auto operator<=>(const OverlapGroup&, const OverlapGroup&) = default;
};

// N-gram occurrence counts per bucket for every (test set, label, n) group.
// Every test set seen gets a group for both labels and every configured n.
struct OverlapStats {
  std::vector<int> n_values;
  std::map<OverlapGroup, std::array<std::uint64_t, 3>> counts;  // indexed by CountBucket

  std::uint64_t total(const OverlapGroup& g) const;
  // 100 * count / total, or 0 for an empty group.
  double percent(const OverlapGroup& g, CountBucket b) const;
};

// Corpus count of an n-gram given as space-joined tokens.
using GramCounter = std::function<std::uint64_t(std::string_view joined, int n)>;

// Unjudged paraphrases are skipped. Texts are normalized before extraction.
OverlapStats overlap_stats(std::span<const LabeledParaphrase> labeled, std::span<const int> n_values,
                           const GramCounter& count);
OverlapStats overlap_stats(std::span<const LabeledParaphrase> labeled, const NGramIndex& index);

struct CopiedShare {
  std::string test_set;
  std::optional<int> n;            // empty for the figure pooled over all n
  std::uint64_t copied = 0;        // n-grams seen in the corpus
  std::uint64_t copied_correct = 0;
  std::optional<double> percent;   // absent when nothing was copied
};

// Share of corpus-attested n-grams that come from correct paraphrases, per
// test set and n, plus a pooled row per test set.
std::vector<CopiedShare> copied_correct_share(const OverlapStats& stats);

// test_set,label,n,bucket,count,percent
std::string overlap_csv(const OverlapStats& stats);
// test_set,n,copied,copied_correct,copied_correct_percent ("pooled" for n)
std::string share_csv(std::span<const CopiedShare> shares);
// One JSON object per group, then one per share row.
std::string overlap_jsonl(const OverlapStats& stats, std::span<const CopiedShare> shares);

// Labeled paraphrases from a dataset, tagged with `test_set`.
std::vector<LabeledParaphrase> labeled_from(std::span<const DatasetEntry> entries, const std::string& test_set);

}  // namespace nctk
