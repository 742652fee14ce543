#include "nctk/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "nctk/errors.hpp"
#include "nctk/porter.hpp"
#include "nctk/wordnet.hpp"

namespace nctk {

std::string_view to_string(MetricId id) {
  switch (id) {
    case MetricId::kRougeL:
      return "rouge_l";
    case MetricId::kMeteor:
      return "meteor";
    case MetricId::kExternal:
      return "external";
  }
  return "";
}

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

MetricScore rouge_l(const TokenSeq& candidate, const TokenSeq& reference, double beta) {
  MetricScore s{0.0, MetricId::kRougeL};
  const std::size_t lcs = lcs_length(candidate, reference);
  if (lcs == 0) return s;
  // (1+b2)PR/(R+b2P) with P = L/|c|, R = L/|r|, reduced to one division.
  const double b2 = beta * beta;
  s.value = (1.0 + b2) * static_cast<double>(lcs) /
            (static_cast<double>(candidate.size()) + b2 * static_cast<double>(reference.size()));
  return s;
}

namespace {

bool intersects(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) return true;
    if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return false;
}

struct TokenFacts {
  std::string stem;
  std::vector<std::uint64_t> synsets;
};

TokenFacts facts_of(std::string_view token, const WordNetKB* kb) {
  TokenFacts f{porter_stem(token), {}};
  if (kb != nullptr) f.synsets = kb->synset_keys(token);
  return f;
}

std::optional<MatchStage> stage_of(std::string_view a, const TokenFacts& fa, std::string_view b,
                                   const TokenFacts& fb) {
  if (a == b) return MatchStage::kExact;
  if (fa.stem == fb.stem) return MatchStage::kStem;
  if (intersects(fa.synsets, fb.synsets)) return MatchStage::kSynonym;
  return std::nullopt;
}

// Lexicographic objective: exact, exact+stem, all matches, then fewer chunks.
struct Score {
  std::size_t e = 0;
  std::size_t es = 0;
  std::size_t m = 0;
  std::size_t chunks = 0;

  bool better_than(const Score& o) const {
    if (e != o.e) return e > o.e;
    if (es != o.es) return es > o.es;
    if (m != o.m) return m > o.m;
    return chunks < o.chunks;
  }
};

class AlignmentSearch {
 public:
  AlignmentSearch(std::size_t n, std::size_t r, std::vector<std::vector<std::optional<MatchStage>>> edges)
      : n_(n), r_(r), edges_(std::move(edges)), used_(r, false), match_(n, kNone) {
    // Per-position options, strongest stage first, then by reference index.
    options_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (int st = 0; st < 3; ++st) {
        for (std::size_t j = 0; j < r; ++j) {
          if (edges_[i][j] && static_cast<int>(*edges_[i][j]) == st) options_[i].push_back(j);
        }
      }
    }
    // Optimistic remaining counts from position i on.
    rem_e_.assign(n + 1, 0);
    rem_es_.assign(n + 1, 0);
    rem_m_.assign(n + 1, 0);
    for (std::size_t i = n; i-- > 0;) {
      int best = 3;
      for (std::size_t j = 0; j < r; ++j) {
        if (edges_[i][j]) best = std::min(best, static_cast<int>(*edges_[i][j]));
      }
      rem_e_[i] = rem_e_[i + 1] + (best == 0);
      rem_es_[i] = rem_es_[i + 1] + (best <= 1);
      rem_m_[i] = rem_m_[i + 1] + (best <= 2);
    }
  }

  MeteorAlignment run() {
    best_score_ = Score{};
    best_match_.assign(n_, kNone);
    found_ = false;
    dfs(0, Score{});
    MeteorAlignment out;
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t j = best_match_[i];
      if (j == kNone) continue;
      out.pairs.emplace_back(i, j);
      switch (*edges_[i][j]) {
        case MatchStage::kExact:
          ++out.exact;
          break;
        case MatchStage::kStem:
          ++out.stem;
          break;
        case MatchStage::kSynonym:
          ++out.synonym;
          break;
      }
    }
    out.chunks = best_score_.chunks;
    return out;
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  static constexpr std::size_t kNodeLimit = 2'000'000;

  void dfs(std::size_t i, Score cur) {
    if (++nodes_ > kNodeLimit && found_) return;
    if (found_) {
      const std::size_t free_refs = r_ - cur.m;
      Score bound{cur.e + std::min(rem_e_[i], free_refs), cur.es + std::min(rem_es_[i], free_refs),
                  cur.m + std::min(rem_m_[i], free_refs), cur.chunks};
      if (!bound.better_than(best_score_)) return;
    }
    if (i == n_) {
      if (!found_ || cur.better_than(best_score_)) {
        best_score_ = cur;
        best_match_ = match_;
        found_ = true;
      }
      return;
    }
    for (std::size_t j : options_[i]) {
      if (used_[j]) continue;
      Score next = cur;
      const MatchStage st = *edges_[i][j];
      next.e += st == MatchStage::kExact;
      next.es += st != MatchStage::kSynonym;
      next.m += 1;
      const bool extends = i > 0 && match_[i - 1] != kNone && match_[i - 1] + 1 == j;
      next.chunks += extends ? 0 : 1;
      used_[j] = true;
      match_[i] = j;
      dfs(i + 1, next);
      used_[j] = false;
      match_[i] = kNone;
    }
    dfs(i + 1, cur);
  }

  std::size_t n_;
  std::size_t r_;
  std::vector<std::vector<std::optional<MatchStage>>> edges_;
  std::vector<std::vector<std::size_t>> options_;
  std::vector<std::size_t> rem_e_;
  std::vector<std::size_t> rem_es_;
  std::vector<std::size_t> rem_m_;
  std::vector<bool> used_;
  std::vector<std::size_t> match_;
  std::vector<std::size_t> best_match_;
  Score best_score_;
  bool found_ = false;
  std::size_t nodes_ = 0;
};

}  // namespace

std::optional<MatchStage> match_stage(std::string_view a, std::string_view b, const WordNetKB* kb) {
  return stage_of(a, facts_of(a, kb), b, facts_of(b, kb));
}

MeteorAlignment meteor_align(const TokenSeq& candidate, const TokenSeq& reference, const WordNetKB* kb) {
  std::vector<TokenFacts> cf;
  std::vector<TokenFacts> rf;
  for (const auto& t : candidate) cf.push_back(facts_of(t, kb));
  for (const auto& t : reference) rf.push_back(facts_of(t, kb));
  std::vector<std::vector<std::optional<MatchStage>>> edges(
      candidate.size(), std::vector<std::optional<MatchStage>>(reference.size()));
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    for (std::size_t j = 0; j < reference.size(); ++j) {
      edges[i][j] = stage_of(candidate[i], cf[i], reference[j], rf[j]);
    }
  }
  return AlignmentSearch(candidate.size(), reference.size(), std::move(edges)).run();
}

double meteor_value(const MeteorAlignment& a, std::size_t candidate_len, std::size_t reference_len,
                    const MeteorParams& params) {
  const std::size_t m = a.matches();
  if (m == 0 || candidate_len == 0 || reference_len == 0) return 0.0;
  const double p = static_cast<double>(m) / static_cast<double>(candidate_len);
  const double r = static_cast<double>(m) / static_cast<double>(reference_len);
  // alpha*P + (1-alpha)*R written so that P == R gives exactly P.
  const double fmean = p * r / (r + params.alpha * (p - r));
  const double frag = static_cast<double>(a.chunks) / static_cast<double>(m);
  const double penalty = params.gamma * std::pow(frag, params.beta);
  return fmean * (1.0 - penalty);
}

MetricScore meteor(const TokenSeq& candidate, const TokenSeq& reference, const WordNetKB* kb,
                   const MeteorParams& params) {
  const MeteorAlignment a = meteor_align(candidate, reference, kb);
  return MetricScore{meteor_value(a, candidate.size(), reference.size(), params), MetricId::kMeteor};
}

EvalReport aggregate_score(const ParaphraseMap& system, const ParaphraseMap& references,
                           const PairMetric& metric, MetricId id, std::string test_set) {
  std::vector<std::string> missing;
  for (const auto& [nc, paras] : system) {
    auto it = references.find(nc);
    if (it == references.end() || it->second.empty()) missing.push_back(nc);
  }
  if (!missing.empty()) {
    std::string msg = "no references for " + std::to_string(missing.size()) + " compound(s):";
    for (const auto& nc : missing) msg += " '" + nc + "'";
    throw DataError(msg);
  }

  EvalReport report;
  report.test_set = std::move(test_set);
  report.metric = id;
  double total = 0.0;
  for (const auto& [nc, paras] : system) {
    std::vector<TokenSeq> refs;
    for (const auto& r : references.at(nc)) refs.push_back(normalize_text(r));
    NcScores row;
    row.nc = nc;
    double sum = 0.0;
    for (const auto& p : paras) {
      const TokenSeq cand = normalize_text(p);
      double best = 0.0;
      for (const auto& r : refs) best = std::max(best, metric(cand, r));
      row.best.push_back(best);
      sum += best;
    }
    row.mean = paras.empty() ? 0.0 : sum / static_cast<double>(paras.size());
    total += row.mean;
    report.rows.push_back(std::move(row));
  }
  report.aggregate = report.rows.empty() ? 0.0 : total / static_cast<double>(report.rows.size());
  return report;
}

}  // namespace nctk
