#include "nctk/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "nctk/corpus_io.hpp"
#include "nctk/curation.hpp"
#include "nctk/dataset.hpp"
#include "nctk/digest.hpp"
#include "nctk/errors.hpp"
#include "nctk/metrics.hpp"
#include "nctk/miner.hpp"
#include "nctk/ngram_index.hpp"
#include "nctk/overlap.hpp"
#include "nctk/scorer_client.hpp"
#include "nctk/wordnet.hpp"

namespace nctk {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& text, const std::string& what) {
  T v{};
  const char* b = text.data();
  const char* e = b + text.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e || b == e) throw UsageError("bad value for " + what + ": '" + text + "'");
  return v;
}

std::vector<int> parse_n_values(const std::string& text, const std::string& what) {
  std::vector<int> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(parse_number<int>(trim(item), what));
  if (out.empty()) throw UsageError("bad value for " + what + ": '" + text + "'");
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::string file_sha256(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read " + p.string());
  Sha256 h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())));
  }
  return h.hex_digest();
}

std::string fmt_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + p.string());
  out << text;
  if (!out) throw DataError("write failed for " + p.string());
}

std::string prefixed(const std::vector<std::string>& header) {
  std::string out;
  for (const auto& h : header) out += "# " + h + "\n";
  return out;
}

const fs::path& need(const std::optional<fs::path>& p, const char* key, const char* env) {
  if (!p) {
    std::string msg = std::string("--") + key + " is required (flag, config key '" + key + "'";
    if (env) msg += std::string(", or ") + env;
    throw UsageError(msg + ")");
  }
  if (!fs::exists(*p)) throw UsageError(std::string(key) + " path does not exist: " + p->string());
  return *p;
}

void need_existing(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw UsageError(std::string(what) + " does not exist: " + p.string());
}

// Provenance lines (without the "# " prefix) for one run.
struct Provenance {
  std::string command;
  std::vector<std::pair<std::string, std::string>> settings;  // command-specific
  std::string fingerprint = "none";
  std::vector<fs::path> inputs;

  std::vector<std::string> lines(const RunConfig& cfg) const {
    std::string canon = cfg.canonical();
    for (const auto& [k, v] : settings) canon += command + "." + k + "=" + v + "\n";
    std::vector<std::string> out = {
        std::string("nctk ") + NCTK_VERSION,
        "command: " + command,
        "config_sha256: " + sha256_hex(canon),
        "corpus_fingerprint: " + fingerprint,
    };
    for (const auto& p : inputs) out.push_back("input: " + p.string() + " sha256=" + file_sha256(p));
    return out;
  }
};

std::vector<DatasetEntry> read_datasets(const std::vector<std::string>& files, bool permissive,
                                        bool allow_duplicates, std::ostream& err) {
  std::vector<DatasetEntry> all;
  for (const auto& f : files) {
    need_existing(f, "dataset");
    std::vector<std::string> warnings;
    ParseOptions po;
    po.permissive = permissive;
    po.allow_duplicate_paraphrases = allow_duplicates;
    po.warnings = &warnings;
    auto es = parse_dataset(f, po);
    for (const auto& w : warnings) err << "warning: " << w << "\n";
    for (auto& e : es) all.push_back(std::move(e));
  }
  return all;
}

std::string bucket_label(CountBucket b) {
  switch (b) {
    case CountBucket::kZero: return "ZERO";
    case CountBucket::kLow: return "LOW";
    case CountBucket::kHigh: return "HIGH";
  }
  return "?";
}

// Refuses an index built from different corpus content unless forced.
void check_fresh(const NGramIndex& idx, const RunConfig& cfg, bool force, std::ostream& err) {
  if (!cfg.corpus) return;
  need_existing(*cfg.corpus, "corpus manifest");
  const std::string now = compute_fingerprint(CorpusManifest::load(*cfg.corpus), idx.config());
  if (now == idx.fingerprint()) return;
  const std::string msg = "index " + idx.directory().string() + " is stale for corpus " + cfg.corpus->string() +
                          " (index " + idx.fingerprint().substr(0, 12) + ", corpus " + now.substr(0, 12) + ")";
  if (!force) throw DataError(msg + "; rebuild it or pass --force");
  err << "warning: " << msg << "\n";
}

std::vector<fs::path> as_paths(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

}  // namespace

void RunConfig::load_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw UsageError("cannot read config file " + file.string());
  const fs::path base = file.parent_path();
  auto path_value = [&](const std::string& v) {
    fs::path p(v);
    return p.is_relative() && !base.empty() ? base / p : p;
  };
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    const std::string where = file.string() + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw UsageError(where + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    const std::string what = where + " '" + key + "'";
    if (key == "corpus") {
      corpus = path_value(value);
    } else if (key == "index") {
      index = path_value(value);
    } else if (key == "wordnet") {
      wordnet = path_value(value);
    } else if (key == "catch_all_rules") {
      catch_all_rules = path_value(value);
    } else if (key == "wordlist") {
      wordlist = path_value(value);
    } else if (key == "n_values") {
      n_values = parse_n_values(value, what);
    } else if (key == "cap") {
      cap = parse_number<std::uint32_t>(value, what);
    } else if (key == "max_freq") {
      max_freq = parse_number<std::int64_t>(value, what);
    } else if (key == "take_k") {
      take_k = parse_number<std::size_t>(value, what);
    } else if (key == "seed") {
      seed = parse_number<std::uint64_t>(value, what);
    } else if (key == "fewshot_k") {
      fewshot_k = parse_number<std::size_t>(value, what);
    } else if (key == "threads") {
      threads = parse_number<unsigned>(value, what);
    } else if (key == "memory_budget_mb") {
      memory_budget_mb = parse_number<std::size_t>(value, what);
    } else if (key == "scorer") {
      scorer = value;
    } else if (key == "scorer_timeout_ms") {
      scorer_timeout_ms = parse_number<std::int64_t>(value, what);
    } else {
      throw UsageError(where + ": unknown config key '" + key + "'");
    }
  }
}

void RunConfig::load_env() {
  auto fill = [](std::optional<fs::path>& slot, const char* name) {
    if (slot) return;
    if (const char* v = std::getenv(name); v != nullptr && *v != '\0') slot = fs::path(v);
  };
  fill(corpus, "NCTK_CORPUS");
  fill(index, "NCTK_INDEX");
  fill(wordnet, "NCTK_WORDNET");
}

std::string RunConfig::canonical() const {
  auto p = [](const std::optional<fs::path>& v) { return v ? v->string() : std::string(); };
  std::map<std::string, std::string> kv = {
      {"corpus", p(corpus)},
      {"index", p(index)},
      {"wordnet", p(wordnet)},
      {"catch_all_rules", p(catch_all_rules)},
      {"wordlist", p(wordlist)},
      {"n_values", join_ints(n_values)},
      {"cap", std::to_string(cap)},
      {"max_freq", std::to_string(max_freq)},
      {"take_k", take_k ? std::to_string(*take_k) : ""},
      {"seed", std::to_string(seed)},
      {"fewshot_k", std::to_string(fewshot_k)},
      {"scorer", scorer},
      {"scorer_timeout_ms", std::to_string(scorer_timeout_ms)},
  };
  // threads and memory_budget_mb do not change any output.
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

namespace {

struct Flags {
  std::string config;
  std::string corpus, index, wordnet, rules, wordlist, n_values, scorer;
  std::uint32_t cap = 0;
  std::int64_t max_freq = 0;
  std::size_t take_k = 0;
  std::uint64_t seed = 0;
  std::size_t fewshot_k = 0;
  unsigned threads = 0;
  std::size_t memory_budget_mb = 0;
  std::int64_t scorer_timeout_ms = 0;
};

// Flags that override config values, applied after the config is loaded.
class Overrides {
 public:
  void add(CLI::Option* opt, std::function<void(RunConfig&)> apply) { items_.push_back({opt, std::move(apply)}); }
  void apply(RunConfig& cfg) const {
    for (const auto& [opt, fn] : items_)
      if (opt->count() > 0) fn(cfg);
  }

 private:
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> items_;
};

void add_shared(CLI::App* sub, Flags& f, Overrides& ov, std::initializer_list<std::string_view> keys) {
  for (std::string_view k : keys) {
    if (k == "corpus") {
      ov.add(sub->add_option("--corpus", f.corpus, "corpus manifest (one shard path per line)"),
             [&f](RunConfig& c) { c.corpus = f.corpus; });
    } else if (k == "index") {
      ov.add(sub->add_option("--index", f.index, "n-gram index directory"),
             [&f](RunConfig& c) { c.index = f.index; });
    } else if (k == "wordnet") {
      ov.add(sub->add_option("--wordnet", f.wordnet, "WordNet database directory"),
             [&f](RunConfig& c) { c.wordnet = f.wordnet; });
    } else if (k == "rules") {
      ov.add(sub->add_option("--rules", f.rules, "catch-all rule file (JSON)"),
             [&f](RunConfig& c) { c.catch_all_rules = f.rules; });
    } else if (k == "wordlist") {
      ov.add(sub->add_option("--wordlist", f.wordlist, "known-word list for the spelling flag"),
             [&f](RunConfig& c) { c.wordlist = f.wordlist; });
    } else if (k == "n") {
      ov.add(sub->add_option("--n", f.n_values, "n-gram lengths, comma separated"),
             [&f](RunConfig& c) { c.n_values = parse_n_values(f.n_values, "--n"); });
    } else if (k == "cap") {
      ov.add(sub->add_option("--cap", f.cap, "count saturation ceiling"), [&f](RunConfig& c) { c.cap = f.cap; });
    } else if (k == "max_freq") {
      ov.add(sub->add_option("--max-freq", f.max_freq, "keep compounds with reference count <= this"),
             [&f](RunConfig& c) { c.max_freq = f.max_freq; });
    } else if (k == "take_k") {
      ov.add(sub->add_option("--take-k", f.take_k, "keep only the k rarest"),
             [&f](RunConfig& c) { c.take_k = f.take_k; });
    } else if (k == "seed") {
      ov.add(sub->add_option("--seed", f.seed, "sampling seed"), [&f](RunConfig& c) { c.seed = f.seed; });
    } else if (k == "k") {
      ov.add(sub->add_option("--k", f.fewshot_k, "number of few-shot examples"),
             [&f](RunConfig& c) { c.fewshot_k = f.fewshot_k; });
    } else if (k == "memory") {
      ov.add(sub->add_option("--memory-budget-mb", f.memory_budget_mb, "counting memory before spilling"),
             [&f](RunConfig& c) { c.memory_budget_mb = f.memory_budget_mb; });
    } else if (k == "scorer") {
      ov.add(sub->add_option("--scorer", f.scorer, "external scorer command line"),
             [&f](RunConfig& c) { c.scorer = f.scorer; });
      ov.add(sub->add_option("--scorer-timeout-ms", f.scorer_timeout_ms, "per-message scorer timeout"),
             [&f](RunConfig& c) { c.scorer_timeout_ms = f.scorer_timeout_ms; });
    }
  }
}

int cmd_index_build(const RunConfig& cfg, bool force, std::ostream& out) {
  const fs::path& corpus = need(cfg.corpus, "corpus", "NCTK_CORPUS");
  if (!cfg.index) throw UsageError("--index is required (flag, config key 'index', or NCTK_INDEX)");
  const fs::path dir = *cfg.index;
  if (fs::exists(dir / NGramIndex::kMetaFile) && !force)
    throw UsageError("index already exists at " + dir.string() + "; pass --force to rebuild");
  NGramConfig nc{cfg.n_values, cfg.cap};
  nc.validate();
  BuildOptions bo;
  bo.threads = std::max(1u, cfg.threads);
  bo.memory_budget = cfg.memory_budget_mb << 20;
  BuildSummary summary;
  const auto idx = build_index(CorpusManifest::load(corpus), nc, dir, bo, &summary);
  Provenance prov{"index build", {{"index_config", nc.describe()}}, idx.fingerprint(), {corpus}};
  out << prefixed(prov.lines(cfg));
  out << "documents\t" << summary.documents << "\n";
  out << "malformed_lines\t" << summary.malformed_lines << "\n";
  out << "bytes\t" << summary.bytes << "\n";
  for (int n : idx.config().n_values) out << "records_n" << n << "\t" << idx.record_count(n) << "\n";
  return 0;
}

int cmd_index_query(const RunConfig& cfg, const std::vector<std::string>& grams, const std::string& grams_file,
                    bool force, std::ostream& out, std::ostream& err) {
  const fs::path& dir = need(cfg.index, "index", "NCTK_INDEX");
  const auto idx = NGramIndex::open(dir);
  check_fresh(idx, cfg, force, err);
  std::vector<std::string> all = grams;
  if (!grams_file.empty()) {
    need_existing(grams_file, "gram file");
    std::ifstream in(grams_file);
    for (std::string line; std::getline(in, line);)
      if (!trim(line).empty()) all.push_back(line);
  }
  if (all.empty()) throw UsageError("index query needs --gram or --grams");
  Provenance prov{"index query", {}, idx.fingerprint(), {}};
  std::string body;
  for (const auto& g : all) {
    const TokenSeq t = normalize_text(g);
    const int n = static_cast<int>(t.size());
    if (!idx.config().has_n(n))
      throw UsageError("gram '" + g + "' has " + std::to_string(n) + " tokens; index has " + idx.config().describe());
    const std::uint32_t c = idx.count(t);
    body += join_tokens(t) + "\t" + std::to_string(c) + "\t" + bucket_label(bucket_of(c)) + "\n";
  }
  out << prefixed(prov.lines(cfg)) << body;
  return 0;
}

int cmd_mine(const RunConfig& cfg, const std::string& out_path, std::string sidecar, const std::string& ref_index,
             const std::string& ref_counts, const std::string& split_name, std::ostream& out) {
  const fs::path& corpus = need(cfg.corpus, "corpus", "NCTK_CORPUS");
  const fs::path& wn = need(cfg.wordnet, "wordnet", "NCTK_WORDNET");
  if (out_path.empty()) throw UsageError("mine needs --out");
  const auto split = parse_split(split_name);
  if (!split) throw UsageError("unknown split '" + split_name + "'");
  if (sidecar.empty()) sidecar = out_path + ".freq.tsv";
  if (cfg.max_freq < 0) throw UsageError("max_freq must be non-negative");

  Provenance prov{"mine", {{"split", split_name}}, "", {corpus}};
  ReferenceCounts rc;
  std::optional<NGramIndex> idx;
  if (!ref_counts.empty()) {
    need_existing(ref_counts, "reference count table");
    rc = load_count_table(ref_counts);
    prov.inputs.push_back(ref_counts);
    prov.settings.push_back({"reference", "counts"});
  } else {
    fs::path dir = ref_index.empty() ? need(cfg.index, "index", "NCTK_INDEX") : fs::path(ref_index);
    need_existing(dir, "reference index");
    idx.emplace(NGramIndex::open(dir));
    if (!idx->config().has_n(2))
      throw UsageError("reference index " + dir.string() + " has no bigrams (" + idx->config().describe() + ")");
    if (static_cast<std::int64_t>(idx->config().cap) <= cfg.max_freq)
      throw UsageError("reference index cap " + std::to_string(idx->config().cap) +
                       " cannot resolve max_freq " + std::to_string(cfg.max_freq) + "; rebuild with --cap " +
                       std::to_string(cfg.max_freq + 1) + " or more");
    rc = [&idx](const NounCompound& nc) -> std::uint64_t { return idx->count_joined(nc.surface(), 2); };
    prov.settings.push_back({"reference_index", idx->fingerprint()});
  }

  const auto manifest = CorpusManifest::load(corpus);
  prov.fingerprint = compute_fingerprint(manifest, NGramConfig{});
  const auto kb = WordNetKB::load(wn);
  MinerOptions mo;
  if (cfg.wordlist) {
    need_existing(*cfg.wordlist, "wordlist");
    std::ifstream in(*cfg.wordlist);
    std::set<std::string> words;
    for (std::string line; std::getline(in, line);) {
      const std::string w = join_tokens(normalize_text(line));
      if (!w.empty()) words.insert(w);
    }
    mo.wordlist = std::move(words);
    prov.inputs.push_back(*cfg.wordlist);
  }
  auto candidates = extract_candidates(manifest, kb, mo, std::max(1u, cfg.threads));
  const auto kept = filter_by_frequency(candidates, rc, cfg.max_freq, cfg.take_k);
  for (auto& c : candidates) c.reference_count = rc(c.nc);

  const auto header = prov.lines(cfg);
  write_dataset(out_path, candidates_as_entries(kept, *split), header);
  write_text(sidecar, prefixed(header) + candidates_tsv(candidates));
  out << prefixed(header);
  out << "candidates\t" << candidates.size() << "\n";
  out << "kept\t" << kept.size() << "\n";
  return 0;
}

int cmd_lint(const RunConfig& cfg, const std::vector<std::string>& data, const std::string& report,
             const std::string& apply_out, bool permissive, std::ostream& out, std::ostream& err) {
  const auto entries = read_datasets(data, permissive, true, err);
  CatchAllRuleSet rules;
  Provenance prov{"lint", {}, "none", as_paths(data)};
  if (cfg.catch_all_rules) {
    need_existing(*cfg.catch_all_rules, "catch-all rule file");
    rules = CatchAllRuleSet::load(*cfg.catch_all_rules);
    prov.inputs.push_back(*cfg.catch_all_rules);
  }
  const auto findings = lint(entries, rules);
  const auto header = prov.lines(cfg);
  std::string body = prefixed(header);
  for (const auto& f : findings) body += serialize_finding(f) + "\n";
  if (report.empty()) {
    out << body;
  } else {
    write_text(report, body);
  }
  if (!apply_out.empty()) write_dataset(apply_out, apply_findings(entries, findings), header);
  std::map<std::string, std::size_t> by_rule;
  for (const auto& f : findings) ++by_rule[std::string(to_string(f.rule))];
  err << findings.size() << " findings";
  for (const auto& [r, n] : by_rule) err << ", " << r << " " << n;
  err << "\n";
  return 0;
}

int cmd_augment(const RunConfig& cfg, const std::vector<std::string>& data, const std::string& out_path,
                bool permissive, std::ostream& out, std::ostream& err) {
  const fs::path& wn = need(cfg.wordnet, "wordnet", "NCTK_WORDNET");
  if (out_path.empty()) throw UsageError("augment needs --out");
  const auto entries = read_datasets(data, permissive, false, err);
  const auto kb = WordNetKB::load(wn);
  std::vector<DatasetEntry> queue;
  std::size_t synonym = 0;
  std::size_t merged = 0;
  for (const auto& e : entries) {
    const auto cands = augment_entry(e, kb);
    for (const auto& c : cands) (c.provenance == AugmentProvenance::kMerge ? merged : synonym)++;
    for (auto& q : review_queue(cands, e.split)) queue.push_back(std::move(q));
  }
  Provenance prov{"augment", {{"wordnet_version", kb.version()}}, "none", as_paths(data)};
  const auto header = prov.lines(cfg);
  write_dataset(out_path, queue, header);
  out << prefixed(header);
  out << "synonym_substitution\t" << synonym << "\n";
  out << "merge\t" << merged << "\n";
  return 0;
}

int cmd_prompt(const RunConfig& cfg, const std::vector<std::string>& data, const std::string& nc_text,
               bool permissive, std::ostream& out, std::ostream& err) {
  if (nc_text.empty()) throw UsageError("prompt needs --nc");
  NounCompound target;
  try {
    target = NounCompound::parse(nc_text);
  } catch (const DataError& e) {
    throw UsageError(std::string("--nc: ") + e.what());
  }
  const auto pool = read_datasets(data, permissive, false, err);
  const auto examples = sample_fewshot_examples(pool, cfg.fewshot_k, cfg.seed, &target);
  Provenance prov{"prompt", {{"nc", target.surface()}}, "none", as_paths(data)};
  out << prefixed(prov.lines(cfg)) << build_fewshot_prompt(examples, target) << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& system_file, const std::string& ref_file,
             const std::string& metric, std::string test_set, const std::string& report, bool permissive,
             std::ostream& out, std::ostream& err) {
  if (system_file.empty() || ref_file.empty()) throw UsageError("eval needs --system and --references");
  static const std::set<std::string> known = {"rouge_l", "meteor", "external", "all"};
  if (!known.contains(metric)) throw UsageError("unknown metric '" + metric + "'");
  const auto system = read_datasets({system_file}, permissive, true, err);
  const auto refs = read_datasets({ref_file}, permissive, true, err);
  if (test_set.empty()) test_set = fs::path(ref_file).stem().string();

  ParaphraseMap sys_map;
  for (const auto& e : system) {
    auto& list = sys_map[e.nc.surface()];
    for (const auto& p : e.paraphrases) list.push_back(p.text);
  }
  ParaphraseMap ref_map;
  for (const auto& e : refs) {
    auto& list = ref_map[e.nc.surface()];
    for (const auto& p : e.paraphrases)
      if (p.label != Label::kIncorrect) list.push_back(p.text);
  }

  const bool all = metric == "all";
  std::vector<std::string> lines;
  std::vector<EvalReport> reports;
  std::optional<WordNetKB> kb;
  Provenance prov{"eval", {{"metric", metric}, {"test_set", test_set}}, "none", {system_file, ref_file}};

  if (all || metric == "rouge_l") {
    const PairMetric m = [](const TokenSeq& c, const TokenSeq& r) { return rouge_l(c, r).value; };
    reports.push_back(aggregate_score(sys_map, ref_map, m, MetricId::kRougeL, test_set));
  }
  if (all || metric == "meteor") {
    if (!cfg.wordnet) {
      if (!all) need(cfg.wordnet, "wordnet", "NCTK_WORDNET");
      lines.push_back("meteor\tunavailable: no WordNet directory configured");
    } else {
      kb.emplace(WordNetKB::load(need(cfg.wordnet, "wordnet", "NCTK_WORDNET")));
      prov.settings.push_back({"wordnet_version", kb->version()});
      const WordNetKB* k = &*kb;
      const PairMetric m = [k](const TokenSeq& c, const TokenSeq& r) { return meteor(c, r, k).value; };
      reports.push_back(aggregate_score(sys_map, ref_map, m, MetricId::kMeteor, test_set));
    }
  }
  if (all || metric == "external") {
    std::string why;
    if (cfg.scorer.empty()) {
      why = "no scorer configured";
    } else {
      try {
        ScorerConfig sc;
        sc.command = split_ws(cfg.scorer);
        sc.timeout = std::chrono::milliseconds(cfg.scorer_timeout_ms);
        ScorerClient client(sc);
        const PairMetric m = [&client](const TokenSeq& c, const TokenSeq& r) {
          return client.score(join_tokens(c), join_tokens(r));
        };
        reports.push_back(aggregate_score(sys_map, ref_map, m, MetricId::kExternal, test_set));
        prov.settings.push_back({"scorer_name", client.info().name});
        prov.settings.push_back({"scorer_version", client.info().version});
      } catch (const ScorerUnavailable& e) {
        why = e.what();
      } catch (const ProtocolError& e) {
        why = e.what();
      }
    }
    if (!why.empty()) {
      lines.push_back("external\tunavailable: " + why);
      err << "warning: external metric unavailable: " << why << "\n";
    }
  }

  const auto header = prov.lines(cfg);
  out << prefixed(header);
  for (const auto& r : reports) out << to_string(r.metric) << "\t" << fmt_score(r.aggregate) << "\n";
  for (const auto& l : lines) out << l << "\n";
  if (!report.empty()) {
    std::string body = prefixed(header);
    for (const auto& r : reports) {
      for (const auto& row : r.rows) {
        nlohmann::ordered_json j;
        j["test_set"] = r.test_set;
        j["metric"] = std::string(to_string(r.metric));
        j["nc"] = row.nc;
        j["best"] = row.best;
        j["mean"] = row.mean;
        body += j.dump() + "\n";
      }
    }
    write_text(report, body);
  }
  return 0;
}

int cmd_overlap(const RunConfig& cfg, const std::vector<std::string>& sets, const std::string& csv,
                const std::string& share, const std::string& jsonl, bool force, bool permissive,
                std::ostream& out, std::ostream& err) {
  const fs::path& dir = need(cfg.index, "index", "NCTK_INDEX");
  if (sets.empty()) throw UsageError("overlap needs at least one --set NAME=FILE");
  const auto idx = NGramIndex::open(dir);
  check_fresh(idx, cfg, force, err);
  std::vector<LabeledParaphrase> labeled;
  Provenance prov{"overlap", {}, idx.fingerprint(), {}};
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == s.size())
      throw UsageError("--set expects NAME=FILE, got '" + s + "'");
    const std::string name = s.substr(0, eq);
    const std::string file = s.substr(eq + 1);
    for (auto& l : labeled_from(read_datasets({file}, permissive, true, err), name)) labeled.push_back(std::move(l));
    prov.inputs.push_back(file);
    prov.settings.push_back({"set", name});
  }
  const auto stats = overlap_stats(labeled, idx);
  const auto shares = copied_correct_share(stats);
  const std::string head = prefixed(prov.lines(cfg));
  if (!csv.empty()) write_text(csv, head + overlap_csv(stats));
  if (!share.empty()) write_text(share, head + share_csv(shares));
  if (!jsonl.empty()) write_text(jsonl, head + overlap_jsonl(stats, shares));
  out << head << overlap_csv(stats) << "\n" << share_csv(shares);
  return 0;
}

int cmd_stats(const RunConfig& cfg, const std::vector<std::string>& data, bool permissive, std::ostream& out,
              std::ostream& err) {
  const auto entries = read_datasets(data, permissive, true, err);
  const auto rep = dataset_stats(entries);
  Provenance prov{"stats", {}, "none", as_paths(data)};
  out << prefixed(prov.lines(cfg));
  out << "split\tncs\tparaphrases\n";
  for (const auto& [split, s] : rep.splits) out << to_string(split) << "\t" << s.ncs << "\t" << s.paraphrases << "\n";
  out << "total\t" << rep.total.ncs << "\t" << rep.total.paraphrases << "\n";
  out << "\nsplit\tfield\tvalue\tparaphrases\n";
  for (const auto& [split, s] : rep.splits) {
    for (const auto& [k, v] : s.by_source) out << to_string(split) << "\tsource\t" << k << "\t" << v << "\n";
    for (const auto& [k, v] : s.by_label) out << to_string(split) << "\tlabel\t" << k << "\t" << v << "\n";
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Noun-compound paraphrase toolkit: corpus n-gram index, dataset curation, mining and evaluation.",
               "nctk"};
  app.set_version_flag("--version", std::string("nctk ") + NCTK_VERSION);
  app.fallthrough();
  app.require_subcommand(1);

  Flags f;
  Overrides ov;
  app.add_option("--config", f.config, "key = value config file (default: $NCTK_CONFIG)");
  ov.add(app.add_option("--threads", f.threads, "worker threads"), [&f](RunConfig& c) { c.threads = f.threads; });

  bool force = false;
  bool permissive = false;
  std::vector<std::string> data, grams, sets;
  std::string grams_file, out_path, sidecar, ref_index, ref_counts, split_name = "test", report, apply_out, nc,
      system_file, ref_file, metric = "all", test_set, csv, share, jsonl;

  auto* index = app.add_subcommand("index", "build or query an n-gram index");
  index->require_subcommand(1);
  auto* build = index->add_subcommand("build", "count n-grams of a corpus into an index");
  add_shared(build, f, ov, {"corpus", "index", "n", "cap", "memory"});
  build->add_flag("--force", force, "overwrite an existing index");
  auto* query = index->add_subcommand("query", "look up corpus counts of n-grams");
  add_shared(query, f, ov, {"index", "corpus"});
  query->add_option("--gram", grams, "n-gram to look up (repeatable)");
  query->add_option("--grams", grams_file, "file with one n-gram per line");
  query->add_flag("--force", force, "query even if the index is stale for --corpus");

  auto* mine = app.add_subcommand("mine", "extract rare noun-compound candidates from a corpus");
  add_shared(mine, f, ov, {"corpus", "wordnet", "index", "max_freq", "take_k", "wordlist"});
  mine->add_option("--out", out_path, "kept candidates as a dataset file");
  mine->add_option("--sidecar", sidecar, "frequency report (default: <out>.freq.tsv)");
  mine->add_option("--reference-index", ref_index, "index with n=2 giving reference counts");
  mine->add_option("--reference-counts", ref_counts, "compound<TAB>count table giving reference counts");
  mine->add_option("--split", split_name, "split written for the candidates");

  auto* lint_cmd = app.add_subcommand("lint", "report catch-all, duplicate, normalization and overlap problems");
  add_shared(lint_cmd, f, ov, {"rules"});
  lint_cmd->add_option("--data", data, "dataset file (repeatable)")->required();
  lint_cmd->add_option("--report", report, "findings file (default: stdout)");
  lint_cmd->add_option("--apply", apply_out, "write the dataset with removals and fixes applied");
  lint_cmd->add_flag("--permissive", permissive, "accept and repair loosely formatted compounds");

  auto* augment = app.add_subcommand("augment", "propose synonym and merge paraphrases for review");
  add_shared(augment, f, ov, {"wordnet"});
  augment->add_option("--data", data, "dataset file (repeatable)")->required();
  augment->add_option("--out", out_path, "review queue dataset file");
  augment->add_flag("--permissive", permissive, "accept and repair loosely formatted compounds");

  auto* prompt = app.add_subcommand("prompt", "build a seeded few-shot prompt");
  add_shared(prompt, f, ov, {"seed", "k"});
  prompt->add_option("--data", data, "example pool dataset file (repeatable)")->required();
  prompt->add_option("--nc", nc, "target compound, e.g. \"chocolate bunny\"");
  prompt->add_flag("--permissive", permissive, "accept and repair loosely formatted compounds");

  auto* eval = app.add_subcommand("eval", "score system paraphrases against references");
  add_shared(eval, f, ov, {"wordnet", "scorer"});
  eval->add_option("--system", system_file, "system output dataset file");
  eval->add_option("--references", ref_file, "reference dataset file");
  eval->add_option("--metric", metric, "rouge_l, meteor, external or all");
  eval->add_option("--test-set", test_set, "name reported for the test set (default: reference file stem)");
  eval->add_option("--report", report, "per-compound rows as JSON lines");
  eval->add_flag("--permissive", permissive, "accept and repair loosely formatted compounds");

  auto* overlap = app.add_subcommand("overlap", "bucket paraphrase n-grams by corpus frequency");
  add_shared(overlap, f, ov, {"index", "corpus"});
  overlap->add_option("--set", sets, "NAME=FILE labeled paraphrases (repeatable)");
  overlap->add_option("--csv", csv, "bucket table CSV");
  overlap->add_option("--share-csv", share, "copied-correct share CSV");
  overlap->add_option("--jsonl", jsonl, "both tables as JSON lines");
  overlap->add_flag("--force", force, "use the index even if stale for --corpus");
  overlap->add_flag("--permissive", permissive, "accept and repair loosely formatted compounds");

  auto* stats = app.add_subcommand("stats", "count compounds and paraphrases per split");
  stats->add_option("--data", data, "dataset file (repeatable)")->required();
  stats->add_flag("--permissive", permissive, "accept and repair loosely formatted compounds");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForVersion& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* where = &app;
    for (auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front(); sub != nullptr;
         sub = sub->get_subcommands().empty() ? nullptr : sub->get_subcommands().front())
      where = sub;
    err << where->help();
    return 2;
  }

  try {
    RunConfig cfg;
    if (!f.config.empty()) {
      cfg.load_file(f.config);
    } else if (const char* env = std::getenv("NCTK_CONFIG"); env != nullptr && *env != '\0') {
      cfg.load_file(env);
    }
    cfg.load_env();
    ov.apply(cfg);

    if (build->parsed()) return cmd_index_build(cfg, force, out);
    if (query->parsed()) return cmd_index_query(cfg, grams, grams_file, force, out, err);
    if (mine->parsed()) return cmd_mine(cfg, out_path, sidecar, ref_index, ref_counts, split_name, out);
    if (lint_cmd->parsed()) return cmd_lint(cfg, data, report, apply_out, permissive, out, err);
    if (augment->parsed()) return cmd_augment(cfg, data, out_path, permissive, out, err);
    if (prompt->parsed()) return cmd_prompt(cfg, data, nc, permissive, out, err);
    if (eval->parsed())
      return cmd_eval(cfg, system_file, ref_file, metric, test_set, report, permissive, out, err);
    if (overlap->parsed()) return cmd_overlap(cfg, sets, csv, share, jsonl, force, permissive, out, err);
    if (stats->parsed()) return cmd_stats(cfg, data, permissive, out, err);
    err << app.help();
    return 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace nctk
