#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nctk {

// A two-noun compound "modifier head", e.g. "access road".
struct NounCompound {
  std::string modifier;
  std::string head;

  std::string surface() const { return modifier + " " + head; }

  // Strict: exactly two lowercase single-token constituents separated by one
  // space. Throws DataError otherwise.
  static NounCompound parse(std::string_view surface);

  friend auto operator<=>(const NounCompound&, const NounCompound&) = default;
};

enum class Source { kHuman, kAugmented, kModel };
enum class Label { kCorrect, kIncorrect, kUnjudged };
enum class Split { kTrain, kDev, kTest };

std::string_view to_string(Source s);
std::string_view to_string(Label l);
std::string_view to_string(Split s);
std::optional<Source> parse_source(std::string_view s);
std::optional<Label> parse_label(std::string_view s);
std::optional<Split> parse_split(std::string_view s);

using Votes = std::array<bool, 3>;

// Correct iff at least two of the three judges accepted.
Label majority_label(const Votes& votes);

struct Paraphrase {
  std::string text;
  Source source = Source::kHuman;
  Label label = Label::kUnjudged;
  std::optional<Votes> votes;

  friend bool operator==(const Paraphrase&, const Paraphrase&) = default;
};

struct DatasetEntry {
  NounCompound nc;
  std::vector<Paraphrase> paraphrases;
  Split split = Split::kTrain;

  friend bool operator==(const DatasetEntry&, const DatasetEntry&) = default;
};

// Collapses whitespace runs, trims, and strips leading/trailing sentence
// punctuation (. , ; : ! ?). Case is preserved.
std::string canonical_text(std::string_view text);

// Key under which two paraphrase texts count as the same paraphrase: the
// normalized tokens of the canonical text, space-joined.
std::string paraphrase_key(std::string_view text);

struct ParseOptions {
  // Lowercase constituents and accept multiword compounds (last word becomes
  // the head), recording a warning instead of failing.
  bool permissive = false;
  // Keep paraphrases that repeat within an entry (lint reports them).
  bool allow_duplicate_paraphrases = false;
  std::vector<std::string>* warnings = nullptr;
};

// One JSON object per line; blank lines and lines starting with '#' are
// skipped. Violations throw ParseError with the line and offending field.
std::vector<DatasetEntry> parse_dataset(const std::filesystem::path& file,
                                        const ParseOptions& options = {});
std::vector<DatasetEntry> parse_dataset_text(std::string_view text, const std::string& name,
                                             const ParseOptions& options = {});

// Canonical single-line form with a fixed key order and no trailing newline.
std::string serialize_entry(const DatasetEntry& entry);
// Header lines are written first, each prefixed with "# ".
std::string serialize_dataset(std::span<const DatasetEntry> entries,
                              std::span<const std::string> header = {});
void write_dataset(const std::filesystem::path& file, std::span<const DatasetEntry> entries,
                   std::span<const std::string> header = {});

// Tab-separated "compound<TAB>paraphrase[<TAB>count]" lines as distributed
// with the original shared task. Paraphrases become human/correct entries
// grouped by compound in first-seen order.
std::vector<DatasetEntry> convert_semeval(const std::filesystem::path& file, Split split,
                                          const ParseOptions& options = {});

struct SplitStats {
  std::size_t ncs = 0;
  std::size_t paraphrases = 0;
  std::map<std::string, std::size_t> by_source;
  std::map<std::string, std::size_t> by_label;

  friend bool operator==(const SplitStats&, const SplitStats&) = default;
};

struct StatsReport {
  std::map<Split, SplitStats> splits;  // every split present, possibly all zero
  SplitStats total;
};

StatsReport dataset_stats(std::span<const DatasetEntry> entries);

using FewShotExample = std::pair<NounCompound, std::string>;

// "Q: what is the meaning of <nc>?" / "A:<paraphrase>" per example, then the
// target question and a bare "A:". Lines are joined by '\n' with no trailing
// newline. Throws UsageError when `examples` is empty.
std::string build_fewshot_prompt(std::span<const FewShotExample> examples,
                                 const NounCompound& target);

// Draws `k` distinct compounds other than `target` with a seeded generator and
// one non-incorrect paraphrase for each. Same inputs and seed, same output.
std::vector<FewShotExample> sample_fewshot_examples(std::span<const DatasetEntry> pool,
                                                    std::size_t k, std::uint64_t seed,
                                                    const NounCompound* target = nullptr);

}  // namespace nctk
