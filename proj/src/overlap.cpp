#include "nctk/overlap.hpp"

#include <cstdio>
#include <set>

#include "json.hpp"
#include "nctk/errors.hpp"

namespace nctk {

namespace {

std::string fmt_percent(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", p);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::vector<NGram> extract_ngrams(const TokenSeq& tokens, int n) {
  if (n < 1) throw UsageError("n-gram length must be >= 1, got " + std::to_string(n));
  std::vector<NGram> out;
  const auto len = static_cast<std::size_t>(n);
  if (tokens.size() < len) return out;
  out.reserve(tokens.size() - len + 1);
  for (std::size_t i = 0; i + len <= tokens.size(); ++i)
    out.emplace_back(std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                              tokens.begin() + static_cast<std::ptrdiff_t>(i + len)));
  return out;
}

std::uint64_t OverlapStats::total(const OverlapGroup& g) const {
  auto it = counts.find(g);
  if (it == counts.end()) return 0;
  return it->second[0] + it->second[1] + it->second[2];
}

double OverlapStats::percent(const OverlapGroup& g, CountBucket b) const {
  const std::uint64_t t = total(g);
  if (t == 0) return 0.0;
  return 100.0 * static_cast<double>(counts.at(g)[static_cast<int>(b)]) / static_cast<double>(t);
}

OverlapStats overlap_stats(std::span<const LabeledParaphrase> labeled, std::span<const int> n_values,
                           const GramCounter& count) {
  OverlapStats st;
  st.n_values.assign(n_values.begin(), n_values.end());
  for (int n : st.n_values)
    if (n < 1) throw UsageError("n-gram length must be >= 1, got " + std::to_string(n));
  std::set<std::string> sets;
  for (const auto& p : labeled) {
    if (p.label == Label::kUnjudged) continue;
    if (sets.insert(p.test_set).second) {
      for (Label l : {Label::kCorrect, Label::kIncorrect})
        for (int n : st.n_values) st.counts[{p.test_set, l, n}] = {0, 0, 0};
    }
    const TokenSeq tokens = normalize_text(p.text);
    for (int n : st.n_values) {
      auto& cell = st.counts[{p.test_set, p.label, n}];
      const auto len = static_cast<std::size_t>(n);
      for (std::size_t i = 0; i + len <= tokens.size(); ++i) {
        std::string joined = tokens[i];
        for (std::size_t k = 1; k < len; ++k) joined += ' ' + tokens[i + k];
        ++cell[static_cast<int>(bucket_of(count(joined, n)))];
      }
    }
  }
  return st;
}

OverlapStats overlap_stats(std::span<const LabeledParaphrase> labeled, const NGramIndex& index) {
  const auto& ns = index.config().n_values;
  return overlap_stats(labeled, ns, [&](std::string_view joined, int n) -> std::uint64_t {
    return index.count_joined(joined, n);
  });
}

std::vector<CopiedShare> copied_correct_share(const OverlapStats& stats) {
  std::map<std::pair<std::string, int>, CopiedShare> per_n;
  std::map<std::string, CopiedShare> pooled;
  for (const auto& [g, c] : stats.counts) {
    const std::uint64_t copied = c[static_cast<int>(CountBucket::kLow)] + c[static_cast<int>(CountBucket::kHigh)];
    auto& row = per_n[{g.test_set, g.n}];
    row.test_set = g.test_set;
    row.n = g.n;
    auto& pool = pooled[g.test_set];
    pool.test_set = g.test_set;
    row.copied += copied;
    pool.copied += copied;
    if (g.label == Label::kCorrect) {
      row.copied_correct += copied;
      pool.copied_correct += copied;
    }
  }
  std::vector<CopiedShare> out;
  auto finish = [](CopiedShare s) {
    if (s.copied > 0) s.percent = 100.0 * static_cast<double>(s.copied_correct) / static_cast<double>(s.copied);
    return s;
  };
  for (auto& [set, pool] : pooled) {
    for (auto& [key, row] : per_n)
      if (key.first == set) out.push_back(finish(row));
    out.push_back(finish(pool));
  }
  return out;
}

std::string overlap_csv(const OverlapStats& stats) {
  std::string out = "test_set,label,n,bucket,count,percent\n";
  for (const auto& [g, c] : stats.counts) {
    for (CountBucket b : kAllBuckets) {
      out += csv_field(g.test_set) + ',' + std::string(to_string(g.label)) + ',' + std::to_string(g.n) + ',' +
             std::string(bucket_name(b)) + ',' + std::to_string(c[static_cast<int>(b)]) + ',' +
             fmt_percent(stats.percent(g, b)) + '\n';
    }
  }
  return out;
}

std::string share_csv(std::span<const CopiedShare> shares) {
  std::string out = "test_set,n,copied,copied_correct,copied_correct_percent\n";
  for (const auto& s : shares) {
    out += csv_field(s.test_set) + ',' + (s.n ? std::to_string(*s.n) : "pooled") + ',' +
           std::to_string(s.copied) + ',' + std::to_string(s.copied_correct) + ',' +
           (s.percent ? fmt_percent(*s.percent) : "") + '\n';
  }
  return out;
}

std::string overlap_jsonl(const OverlapStats& stats, std::span<const CopiedShare> shares) {
  std::string out;
  for (const auto& [g, c] : stats.counts) {
    nlohmann::ordered_json j;
    j["test_set"] = g.test_set;
    j["label"] = std::string(to_string(g.label));
    j["n"] = g.n;
    for (CountBucket b : kAllBuckets) {
      j["buckets"][std::string(bucket_name(b))] = {{"count", c[static_cast<int>(b)]},
                                                   {"percent", stats.percent(g, b)}};
    }
    out += j.dump() + '\n';
  }
  for (const auto& s : shares) {
    nlohmann::ordered_json j;
    j["test_set"] = s.test_set;
    j["n"] = s.n ? nlohmann::ordered_json(*s.n) : nlohmann::ordered_json("pooled");
    j["copied"] = s.copied;
    j["copied_correct"] = s.copied_correct;
    j["copied_correct_percent"] = s.percent ? nlohmann::ordered_json(*s.percent) : nlohmann::ordered_json(nullptr);
    out += j.dump() + '\n';
  }
  return out;
}

std::vector<LabeledParaphrase> labeled_from(std::span<const DatasetEntry> entries, const std::string& test_set) {
  std::vector<LabeledParaphrase> out;
  for (const auto& e : entries)
    for (const auto& p : e.paraphrases) out.push_back({p.text, p.label, test_set});
  return out;
}

}  // namespace nctk
