#include "nctk/miner.hpp"

#include <absl/container/flat_hash_map.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "nctk/errors.hpp"
#include "nctk/wordnet.hpp"

namespace nctk {

namespace {

struct Occurrences {
  std::uint64_t count = 0;
  std::uint64_t non_initial = 0;
  std::uint64_t capitalized = 0;  // among non-initial occurrences
  std::uint64_t misspelled = 0;
  // Neighbour token -> occurrences, left and right of the bigram.
  absl::flat_hash_map<std::string, std::uint64_t> left;
  absl::flat_hash_map<std::string, std::uint64_t> right;
};

void add_into(absl::flat_hash_map<std::string, std::uint64_t>& into,
              const absl::flat_hash_map<std::string, std::uint64_t>& from) {
  for (const auto& [k, v] : from) into[k] += v;
}

std::uint64_t max_value(const absl::flat_hash_map<std::string, std::uint64_t>& m) {
  std::uint64_t best = 0;
  for (const auto& [k, v] : m) best = std::max(best, v);
  return best;
}

// Punctuation tokens are single non-alphanumeric ASCII characters.
bool word_like(const std::string& t) {
  return !(t.size() == 1 && !std::isalnum(static_cast<unsigned char>(t[0])));
}

}  // namespace

std::string_view to_string(CandidateFlag f) {
  switch (f) {
    case CandidateFlag::kNamedEntity: return "named_entity";
    case CandidateFlag::kSpelling: return "spelling";
    case CandidateFlag::kLargerExpression: return "larger_expression";
  }
  return "?";
}

std::set<std::string> MinerOptions::default_stopwords() {
  return {"i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your", "yours",
          "yourself", "yourselves", "he", "him", "his", "himself", "she", "her", "hers", "herself",
          "it", "its", "itself", "they", "them", "their", "theirs", "themselves", "what", "which",
          "who", "whom", "this", "that", "these", "those", "am", "is", "are", "was", "were", "be",
          "been", "being", "have", "has", "had", "having", "do", "does", "did", "doing", "a", "an",
          "the", "and", "but", "if", "or", "because", "as", "until", "while", "of", "at", "by",
          "for", "with", "about", "against", "between", "into", "through", "during", "before",
          "after", "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over",
          "under", "again", "further", "then", "once", "here", "there", "when", "where", "why",
          "how", "all", "any", "both", "each", "few", "more", "most", "other", "some", "such", "no",
          "nor", "not", "only", "own", "same", "so", "than", "too", "very", "s", "t", "can",
          "will", "just", "don", "should", "now", "d", "ll", "m", "o", "re", "ve", "y", "ain",
          "aren", "couldn", "didn", "doesn", "hadn", "hasn", "haven", "isn", "ma", "mightn",
          "mustn", "needn", "shan", "shouldn", "wasn", "weren", "won", "wouldn",
          "yesterday", "today", "tonight", "tomorrow"};
}

struct CandidateCounter::Impl {
  const WordNetKB* kb;
  const MinerOptions* options;
  std::map<std::pair<std::string, std::string>, Occurrences> pairs;
  // Token -> noun lemma, or empty when the token is not a usable noun.
  absl::flat_hash_map<std::string, std::string> lemma_cache;
  absl::flat_hash_map<std::string, bool> spelling_cache;

  const std::string& noun_lemma(const std::string& token) {
    auto it = lemma_cache.find(token);
    if (it != lemma_cache.end()) return it->second;
    std::string lemma;
    if (!options->stopwords.contains(token)) {
      const auto m = kb->morphy(token, PartOfSpeech::kNoun);
      if (!m.empty()) lemma = m.front();
    }
    return lemma_cache.emplace(token, std::move(lemma)).first->second;
  }

  bool suspicious(const std::string& token) {
    if (!options->wordlist) return false;
    auto it = spelling_cache.find(token);
    if (it != spelling_cache.end()) return it->second;
    bool known = options->wordlist->contains(token);
    for (auto pos : kAllPos) known = known || kb->has_lemma(token, pos);
    return spelling_cache.emplace(token, !known).first->second;
  }
};

CandidateCounter::CandidateCounter(const WordNetKB& kb, const MinerOptions& options)
    : impl_(std::make_unique<Impl>()) {
  impl_->kb = &kb;
  impl_->options = &options;
}
CandidateCounter::~CandidateCounter() = default;
CandidateCounter::CandidateCounter(CandidateCounter&&) noexcept = default;
CandidateCounter& CandidateCounter::operator=(CandidateCounter&&) noexcept = default;

void CandidateCounter::add(std::string_view raw_text) {
  const auto tokens = tokenize_cased(raw_text);
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    const std::string a = impl_->noun_lemma(tokens[i].text);
    if (a.empty()) continue;
    const std::string& b = impl_->noun_lemma(tokens[i + 1].text);
    if (b.empty()) continue;
    auto& occ = impl_->pairs[{a, b}];
    ++occ.count;
    if (!tokens[i].sentence_initial) {
      ++occ.non_initial;
      if (tokens[i].capitalized || tokens[i + 1].capitalized) ++occ.capitalized;
    }
    if (impl_->suspicious(tokens[i].text) || impl_->suspicious(tokens[i + 1].text)) ++occ.misspelled;
    if (i > 0 && word_like(tokens[i - 1].text)) ++occ.left[tokens[i - 1].text];
    if (i + 2 < tokens.size() && word_like(tokens[i + 2].text)) ++occ.right[tokens[i + 2].text];
  }
}

void CandidateCounter::merge(CandidateCounter&& other) {
  for (auto& [key, o] : other.impl_->pairs) {
    auto [it, fresh] = impl_->pairs.try_emplace(key);
    if (fresh) {
      it->second = std::move(o);
      continue;
    }
    auto& t = it->second;
    t.count += o.count;
    t.non_initial += o.non_initial;
    t.capitalized += o.capitalized;
    t.misspelled += o.misspelled;
    add_into(t.left, o.left);
    add_into(t.right, o.right);
  }
  other.impl_->pairs.clear();
}

std::vector<NCCandidate> CandidateCounter::candidates() const {
  const auto& opt = *impl_->options;
  std::vector<NCCandidate> out;
  out.reserve(impl_->pairs.size());
  for (const auto& [key, o] : impl_->pairs) {
    NCCandidate c;
    c.nc = {key.first, key.second};
    c.corpus_frequency = o.count;
    if (o.non_initial > 0 &&
        static_cast<double>(o.capitalized) > opt.named_entity_share * static_cast<double>(o.non_initial))
      c.flags.insert(CandidateFlag::kNamedEntity);
    if (2 * o.misspelled > o.count) c.flags.insert(CandidateFlag::kSpelling);
    const std::uint64_t dominant = std::max(max_value(o.left), max_value(o.right));
    if (o.count >= opt.larger_expression_min_count &&
        static_cast<double>(dominant) > opt.larger_expression_share * static_cast<double>(o.count))
      c.flags.insert(CandidateFlag::kLargerExpression);
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<NCCandidate> extract_candidates(std::span<const Document> docs, const WordNetKB& kb,
                                            const MinerOptions& options) {
  CandidateCounter counter(kb, options);
  for (const auto& d : docs) counter.add(d.text);
  return counter.candidates();
}

std::vector<NCCandidate> extract_candidates(const CorpusManifest& manifest, const WordNetKB& kb,
                                            const MinerOptions& options, unsigned threads) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, manifest.shards.size()))));
  std::vector<CandidateCounter> counters;
  for (unsigned t = 0; t < threads; ++t) counters.emplace_back(kb, options);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](unsigned t) {
    try {
      for (std::size_t s; (s = next++) < manifest.shards.size();)
        read_shard(manifest.shards[s], s, [&](const Document& d) { counters[t].add(d.text); });
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work, t);
  work(0);
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (unsigned t = 1; t < threads; ++t) counters[0].merge(std::move(counters[t]));
  return counters[0].candidates();
}

std::vector<NCCandidate> filter_by_frequency(std::span<const NCCandidate> candidates,
                                             const ReferenceCounts& reference_counts,
                                             std::int64_t max_freq, std::optional<std::size_t> take_k) {
  if (max_freq < 0) throw UsageError("max frequency must be non-negative, got " + std::to_string(max_freq));
  std::vector<NCCandidate> out;
  for (const auto& c : candidates) {
    if (!c.flags.empty()) continue;
    const std::uint64_t n = reference_counts(c.nc);
    if (n > static_cast<std::uint64_t>(max_freq)) continue;
    NCCandidate k = c;
    k.reference_count = n;
    out.push_back(std::move(k));
  }
  std::sort(out.begin(), out.end(), [](const NCCandidate& a, const NCCandidate& b) {
    if (*a.reference_count != *b.reference_count) return *a.reference_count < *b.reference_count;
    return a.nc < b.nc;
  });
  if (take_k && out.size() > *take_k) out.resize(*take_k);
  return out;
}

ReferenceCounts load_count_table(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot read count table " + file.string());
  auto table = std::make_shared<std::map<std::string, std::uint64_t>>();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw ParseError(file.string(), line_no, "expected compound<TAB>count");
    const std::string key = join_tokens(normalize_text(line.substr(0, tab)));
    std::uint64_t n = 0;
    const char* b = line.data() + tab + 1;
    const char* e = line.data() + line.size();
    auto [p, ec] = std::from_chars(b, e, n);
    if (ec != std::errc() || p != e || b == e)
      throw ParseError(file.string(), line_no, "bad count '" + line.substr(tab + 1) + "'");
    if (!table->emplace(key, n).second)
      throw ParseError(file.string(), line_no, "duplicate compound '" + key + "'");
  }
  return [table](const NounCompound& nc) -> std::uint64_t {
    auto it = table->find(nc.surface());
    return it == table->end() ? 0 : it->second;
  };
}

std::string candidates_tsv(std::span<const NCCandidate> candidates) {
  std::string out = "nc\tcorpus_frequency\treference_count\tflags\n";
  for (const auto& c : candidates) {
    out += c.nc.surface();
    out += '\t' + std::to_string(c.corpus_frequency) + '\t';
    if (c.reference_count) out += std::to_string(*c.reference_count);
    out += '\t';
    bool first = true;
    for (auto f : c.flags) {
      if (!first) out += ',';
      out += to_string(f);
      first = false;
    }
    out += '\n';
  }
  return out;
}

std::vector<DatasetEntry> candidates_as_entries(std::span<const NCCandidate> candidates, Split split) {
  std::vector<DatasetEntry> out;
  for (const auto& c : candidates) out.push_back({c.nc, {}, split});
  return out;
}

}  // namespace nctk
