#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nctk/corpus_io.hpp"
#include "nctk/dataset.hpp"

namespace nctk {

class WordNetKB;

// Generic paraphrase templates. A prepositional entry P matches exactly
// "<head> P <modifier>"; a verb entry V matches
// "<head> [that|which|who] [is|are|was|were] V <modifier>".
struct CatchAllRuleSet {
  std::vector<std::string> prepositional{"of"};
  std::vector<std::string> generic_verbs{"based on", "involving", "associated with",
                                         "concerned with", "coming from"};

  // {"prepositional": [...], "generic_verbs": [...]}; a missing key keeps the
  // default list. Entries are normalized; empty entries are a DataError.
  static CatchAllRuleSet load(const std::filesystem::path& file);
};

bool is_catch_all(const TokenSeq& paraphrase, const NounCompound& nc, const CatchAllRuleSet& rules);
bool is_catch_all(std::string_view paraphrase, const NounCompound& nc, const CatchAllRuleSet& rules);

// Compounds present in both lists, sorted.
std::vector<NounCompound> find_split_overlap(std::span<const DatasetEntry> train,
                                             std::span<const DatasetEntry> test);

enum class LintRule { kSplitOverlap, kCatchAll, kDuplicate, kNormalization };
enum class LintAction { kRemove, kFix, kReview };

std::string_view to_string(LintRule r);    // "split_overlap", "catch_all", ...
std::string_view to_string(LintAction a);  // "remove", "fix", "review"

inline constexpr std::size_t kWholeEntry = static_cast<std::size_t>(-1);

struct LintFinding {
  NounCompound nc;
  Split split = Split::kTrain;
  std::size_t paraphrase_index = kWholeEntry;
  std::string paraphrase;  // empty for whole-entry findings
  LintRule rule = LintRule::kNormalization;
  LintAction action = LintAction::kReview;
  std::string detail;  // fixed text for fix actions, otherwise a message

  friend bool operator==(const LintFinding&, const LintFinding&) = default;
};

// Findings in entry order, then paraphrase order. A test entry whose compound
// also appears in train is reported once as a whole-entry removal.
std::vector<LintFinding> lint(std::span<const DatasetEntry> entries, const CatchAllRuleSet& rules = {});

// Applies remove and fix findings (review findings are left alone). Removal
// wins over a fix of the same paraphrase.
std::vector<DatasetEntry> apply_findings(std::span<const DatasetEntry> entries,
                                         std::span<const LintFinding> findings);

// One JSON object per finding.
std::string serialize_finding(const LintFinding& f);

enum class AugmentProvenance { kSynonymSubstitution, kMerge };
std::string_view to_string(AugmentProvenance p);

struct AugmentCandidate {
  NounCompound nc;
  std::string text;
  AugmentProvenance provenance = AugmentProvenance::kSynonymSubstitution;
  bool needs_review = true;
  std::string detail;  // e.g. "operates -> runs"

  friend bool operator==(const AugmentCandidate&, const AugmentCandidate&) = default;
};

// Inflects a verb lemma like `surface` is inflected relative to its own
// lemma: -s, -ed, -ing or base. Irregular forms come from the KB exception
// list, otherwise regular spelling rules apply.
std::string reinflect(std::string_view lemma, std::string_view surface, const WordNetKB& kb);

// Verb synonym substitution over every paraphrase of the entry. The compound's
// own nouns and auxiliaries are never substituted. Candidates duplicating an
// existing paraphrase or an earlier candidate are dropped.
std::vector<AugmentCandidate> synonym_expand(const DatasetEntry& entry, const WordNetKB& kb);

// Exchanges the verb group and preposition between two paraphrases of the
// shape "<head> [rel] [copula] verb [prep] <modifier>". A verb moved into a
// frame without a relativizer becomes a passive participle; a passive verb in
// a frame with a relativizer takes a copula. The originals are excluded.
std::vector<AugmentCandidate> merge_paraphrases(const Paraphrase& p1, const Paraphrase& p2,
                                                const NounCompound& nc, const WordNetKB& kb);

// Synonym candidates plus pairwise merges of the entry's non-incorrect
// paraphrases, none equal to an existing paraphrase, in a stable order.
std::vector<AugmentCandidate> augment_entry(const DatasetEntry& entry, const WordNetKB& kb);

// Review queue: candidates as augmented/unjudged paraphrases grouped per
// compound, in first-seen order.
std::vector<DatasetEntry> review_queue(std::span<const AugmentCandidate> candidates, Split split);

}  // namespace nctk
