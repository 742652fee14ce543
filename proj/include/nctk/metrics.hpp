#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nctk/corpus_io.hpp"

namespace nctk {

class WordNetKB;

enum class MetricId { kRougeL, kMeteor, kExternal };

std::string_view to_string(MetricId id);  // "rouge_l", "meteor", "external"

struct MetricScore {
  double value = 0.0;  // in [0, 1]
  MetricId metric = MetricId::kRougeL;
};

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b);

// LCS-based F-measure. beta = 1 gives the balanced F1; larger beta weights
// recall. Zero when either side is empty or nothing is shared.
MetricScore rouge_l(const TokenSeq& candidate, const TokenSeq& reference, double beta = 1.0);

enum class MatchStage { kExact, kStem, kSynonym };

struct MeteorAlignment {
  std::size_t exact = 0;
  std::size_t stem = 0;
  std::size_t synonym = 0;
  std::size_t chunks = 0;
  // (candidate index, reference index), ascending by candidate index.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;

  std::size_t matches() const { return exact + stem + synonym; }
};

struct MeteorParams {
  double alpha = 0.9;  // Fmean = P*R / (alpha*P + (1-alpha)*R), i.e. 10PR/(R+9P)
  double beta = 3.0;   // fragmentation exponent
  double gamma = 0.5;  // fragmentation weight
};

// The strongest stage at which two tokens match, if any. Synonym matching
// needs a KB and is skipped when `kb` is null.
std::optional<MatchStage> match_stage(std::string_view a, std::string_view b, const WordNetKB* kb);

// Optimal one-to-one alignment: the most exact matches, then the most exact
// plus stem matches, then the most matches overall, then the fewest chunks.
MeteorAlignment meteor_align(const TokenSeq& candidate, const TokenSeq& reference,
                             const WordNetKB* kb);

double meteor_value(const MeteorAlignment& alignment, std::size_t candidate_len,
                    std::size_t reference_len, const MeteorParams& params = {});

MetricScore meteor(const TokenSeq& candidate, const TokenSeq& reference, const WordNetKB* kb,
                   const MeteorParams& params = {});

using PairMetric = std::function<double(const TokenSeq& candidate, const TokenSeq& reference)>;

struct NcScores {
  std::string nc;
  std::vector<double> best;  // per system paraphrase, best score over references
  double mean = 0.0;
};

struct EvalReport {
  std::string test_set;
  MetricId metric = MetricId::kRougeL;
  std::vector<NcScores> rows;  // ordered by compound
  double aggregate = 0.0;
};

using ParaphraseMap = std::map<std::string, std::vector<std::string>>;

// Mean over compounds of the mean over system paraphrases of the best score
// against any reference. Texts are normalized before scoring. A compound with
// no system paraphrases scores 0. Throws DataError listing every system
// compound that has no references.
EvalReport aggregate_score(const ParaphraseMap& system, const ParaphraseMap& references,
                           const PairMetric& metric, MetricId id, std::string test_set = "");

}  // namespace nctk
