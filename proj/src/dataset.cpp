#include "nctk/dataset.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "nctk/corpus_io.hpp"
#include "nctk/errors.hpp"

namespace nctk {

using ojson = nlohmann::ordered_json;

std::string_view to_string(Source s) {
  switch (s) {
    case Source::kHuman:
      return "human";
    case Source::kAugmented:
      return "augmented";
    case Source::kModel:
      return "model";
  }
  return "";
}

std::string_view to_string(Label l) {
  switch (l) {
    case Label::kCorrect:
      return "correct";
    case Label::kIncorrect:
      return "incorrect";
    case Label::kUnjudged:
      return "unjudged";
  }
  return "";
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kDev:
      return "dev";
    case Split::kTest:
      return "test";
  }
  return "";
}

std::optional<Source> parse_source(std::string_view s) {
  if (s == "human") return Source::kHuman;
  if (s == "augmented") return Source::kAugmented;
  if (s == "model") return Source::kModel;
  return std::nullopt;
}

std::optional<Label> parse_label(std::string_view s) {
  if (s == "correct") return Label::kCorrect;
  if (s == "incorrect") return Label::kIncorrect;
  if (s == "unjudged") return Label::kUnjudged;
  return std::nullopt;
}

std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "dev") return Split::kDev;
  if (s == "test") return Split::kTest;
  return std::nullopt;
}

Label majority_label(const Votes& votes) {
  const int yes = static_cast<int>(votes[0]) + votes[1] + votes[2];
  return yes >= 2 ? Label::kCorrect : Label::kIncorrect;
}

namespace {

bool valid_constituent(std::string_view c) {
  if (c.empty()) return false;
  for (unsigned char ch : c) {
    if (ch <= 0x20 || ch == 0x7F) return false;
  }
  // Lowercase and NFC: normalizing (which may detach hyphens) and gluing the
  // pieces back together must give the same bytes.
  std::string glued;
  for (const auto& t : normalize_text(c)) glued += t;
  return glued == c;
}

bool sentence_punct(char c) {
  return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?';
}

bool space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace

NounCompound NounCompound::parse(std::string_view surface) {
  const auto sp = surface.find(' ');
  if (sp == std::string_view::npos || surface.find(' ', sp + 1) != std::string_view::npos) {
    throw DataError("noun compound must be two space-separated words: '" + std::string(surface) + "'");
  }
  NounCompound nc{std::string(surface.substr(0, sp)), std::string(surface.substr(sp + 1))};
  if (!valid_constituent(nc.modifier) || !valid_constituent(nc.head)) {
    throw DataError("noun compound constituents must be lowercase single tokens: '" +
                    std::string(surface) + "'");
  }
  return nc;
}

std::string canonical_text(std::string_view text) {
  std::string collapsed;
  collapsed.reserve(text.size());
  for (char c : text) {
    if (space(c)) {
      if (!collapsed.empty() && collapsed.back() != ' ') collapsed.push_back(' ');
    } else {
      collapsed.push_back(c);
    }
  }
  std::size_t b = 0;
  std::size_t e = collapsed.size();
  while (b < e && (collapsed[b] == ' ' || sentence_punct(collapsed[b]))) ++b;
  while (e > b && (collapsed[e - 1] == ' ' || sentence_punct(collapsed[e - 1]))) --e;
  return collapsed.substr(b, e - b);
}

std::string paraphrase_key(std::string_view text) {
  return join_tokens(normalize_text(canonical_text(text)));
}

namespace {

NounCompound parse_nc_field(std::string_view raw, const ParseOptions& options,
                            const std::function<void(const std::string&)>& fail,
                            const std::function<void(const std::string&)>& warn) {
  try {
    return NounCompound::parse(raw);
  } catch (const DataError& e) {
    if (!options.permissive) fail(std::string("field 'nc': ") + e.what());
  }
  const TokenSeq words = [&] {
    TokenSeq out;
    std::string cur;
    for (char c : std::string(raw)) {
      if (space(c)) {
        if (!cur.empty()) out.push_back(std::move(cur));
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
  }();
  if (words.size() < 2) fail("field 'nc': need at least two words: '" + std::string(raw) + "'");
  // Lowercase each word; hyphen pieces are glued back so a word stays a word.
  auto fold = [](std::string_view w) {
    std::string out;
    for (const auto& t : normalize_text(w)) out += t;
    return out;
  };
  NounCompound nc;
  for (std::size_t i = 0; i + 1 < words.size(); ++i) {
    if (i > 0) nc.modifier += ' ';
    nc.modifier += fold(words[i]);
  }
  nc.head = fold(words.back());
  warn("noun compound '" + std::string(raw) + "' read as modifier '" + nc.modifier + "', head '" +
       nc.head + "'");
  return nc;
}

}  // namespace

std::vector<DatasetEntry> parse_dataset_text(std::string_view text, const std::string& name,
                                             const ParseOptions& options) {
  std::vector<DatasetEntry> entries;
  std::set<std::pair<Split, std::string>> seen_nc;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') continue;

    auto fail = [&](const std::string& why) { throw ParseError(name, line_no, why); };
    auto warn = [&](const std::string& what) {
      if (options.warnings != nullptr) {
        options.warnings->push_back(name + ":" + std::to_string(line_no) + ": " + what);
      }
    };

    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) fail("record is not an object");
    for (const auto& [key, value] : obj.items()) {
      if (key != "nc" && key != "paraphrases" && key != "split") {
        if (!options.permissive) fail("unknown field '" + key + "'");
        warn("ignoring unknown field '" + key + "'");
      }
    }
    auto string_field = [&](const nlohmann::json& o, const char* field,
                            const std::string& path) -> std::string {
      auto it = o.find(field);
      if (it == o.end()) fail("missing field '" + path + "'");
      if (!it->is_string()) fail("field '" + path + "' must be a string");
      return it->get<std::string>();
    };

    DatasetEntry entry;
    entry.nc = parse_nc_field(string_field(obj, "nc", "nc"), options, fail, warn);
    const std::string split = string_field(obj, "split", "split");
    if (auto s = parse_split(split)) {
      entry.split = *s;
    } else {
      fail("field 'split': unknown split '" + split + "'");
    }

    auto plist = obj.find("paraphrases");
    if (plist == obj.end()) fail("missing field 'paraphrases'");
    if (!plist->is_array()) fail("field 'paraphrases' must be an array");
    std::set<std::string> keys;
    for (std::size_t i = 0; i < plist->size(); ++i) {
      const auto& p = (*plist)[i];
      const std::string path = "paraphrases[" + std::to_string(i) + "]";
      if (!p.is_object()) fail("field '" + path + "' must be an object");
      for (const auto& [key, value] : p.items()) {
        if (key != "text" && key != "source" && key != "label" && key != "votes") {
          if (!options.permissive) fail("unknown field '" + path + "." + key + "'");
          warn("ignoring unknown field '" + path + "." + key + "'");
        }
      }
      Paraphrase para;
      para.text = string_field(p, "text", path + ".text");
      if (normalize_text(para.text).empty()) fail("field '" + path + ".text' is empty");
      if (!is_valid_utf8(para.text)) fail("field '" + path + ".text' is not valid UTF-8");
      const std::string source = string_field(p, "source", path + ".source");
      if (auto s = parse_source(source)) {
        para.source = *s;
      } else {
        fail("field '" + path + ".source': unknown source '" + source + "'");
      }
      const std::string label = string_field(p, "label", path + ".label");
      if (auto l = parse_label(label)) {
        para.label = *l;
      } else {
        fail("field '" + path + ".label': unknown label '" + label + "'");
      }
      if (auto v = p.find("votes"); v != p.end() && !v->is_null()) {
        if (!v->is_array() || v->size() != 3 ||
            !std::all_of(v->begin(), v->end(), [](const auto& b) { return b.is_boolean(); })) {
          fail("field '" + path + ".votes' must be three booleans");
        }
        para.votes = Votes{(*v)[0].get<bool>(), (*v)[1].get<bool>(), (*v)[2].get<bool>()};
        if (majority_label(*para.votes) != para.label) {
          fail("field '" + path + ".label': '" + label + "' disagrees with the majority of votes");
        }
      }
      if (!keys.insert(paraphrase_key(para.text)).second) {
        if (!options.allow_duplicate_paraphrases) {
          fail("field '" + path + ".text': duplicate paraphrase '" + para.text + "'");
        }
      }
      entry.paraphrases.push_back(std::move(para));
    }
    if (!seen_nc.emplace(entry.split, entry.nc.surface()).second) {
      fail("duplicate noun compound '" + entry.nc.surface() + "' in split " +
           std::string(to_string(entry.split)));
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::vector<DatasetEntry> parse_dataset(const std::filesystem::path& file, const ParseOptions& options) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot read dataset " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_dataset_text(ss.str(), file.string(), options);
}

std::string serialize_entry(const DatasetEntry& entry) {
  ojson obj;
  obj["nc"] = entry.nc.surface();
  obj["paraphrases"] = ojson::array();
  for (const auto& p : entry.paraphrases) {
    ojson po;
    po["text"] = p.text;
    po["source"] = to_string(p.source);
    po["label"] = to_string(p.label);
    if (p.votes) po["votes"] = {(*p.votes)[0], (*p.votes)[1], (*p.votes)[2]};
    obj["paraphrases"].push_back(std::move(po));
  }
  obj["split"] = to_string(entry.split);
  return obj.dump();
}

std::string serialize_dataset(std::span<const DatasetEntry> entries, std::span<const std::string> header) {
  std::string out;
  for (const auto& h : header) out += "# " + h + "\n";
  for (const auto& e : entries) {
    out += serialize_entry(e);
    out += '\n';
  }
  return out;
}

void write_dataset(const std::filesystem::path& file, std::span<const DatasetEntry> entries,
                   std::span<const std::string> header) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  out << serialize_dataset(entries, header);
  if (!out) throw DataError("cannot write dataset " + file.string());
}

std::vector<DatasetEntry> convert_semeval(const std::filesystem::path& file, Split split,
                                          const ParseOptions& options) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot read " + file.string());
  std::vector<DatasetEntry> entries;
  std::map<std::string, std::size_t> slot;
  std::map<std::string, std::set<std::string>> keys;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
    auto fail = [&](const std::string& why) { throw ParseError(file.string(), line_no, why); };
    auto warn = [&](const std::string& what) {
      if (options.warnings != nullptr) {
        options.warnings->push_back(file.string() + ":" + std::to_string(line_no) + ": " + what);
      }
    };
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() < 2 || cols.size() > 3) fail("expected 2 or 3 tab-separated columns");
    const std::string text = canonical_text(cols[1]);
    if (normalize_text(text).empty()) fail("empty paraphrase");
    const NounCompound nc = parse_nc_field(cols[0], options, fail, warn);
    const std::string surface = nc.surface();
    auto [it, fresh] = slot.emplace(surface, entries.size());
    if (fresh) entries.push_back(DatasetEntry{nc, {}, split});
    if (!keys[surface].insert(paraphrase_key(text)).second) {
      if (!options.allow_duplicate_paraphrases) continue;
    }
    entries[it->second].paraphrases.push_back(Paraphrase{text, Source::kHuman, Label::kCorrect, std::nullopt});
  }
  return entries;
}

StatsReport dataset_stats(std::span<const DatasetEntry> entries) {
  StatsReport report;
  for (Split s : {Split::kTrain, Split::kDev, Split::kTest}) report.splits[s] = SplitStats{};
  auto add = [](SplitStats& st, const DatasetEntry& e) {
    ++st.ncs;
    st.paraphrases += e.paraphrases.size();
    for (const auto& p : e.paraphrases) {
      ++st.by_source[std::string(to_string(p.source))];
      ++st.by_label[std::string(to_string(p.label))];
    }
  };
  for (const auto& e : entries) {
    add(report.splits[e.split], e);
    add(report.total, e);
  }
  return report;
}

std::string build_fewshot_prompt(std::span<const FewShotExample> examples, const NounCompound& target) {
  if (examples.empty()) throw UsageError("few-shot prompt needs at least one example");
  std::string out;
  for (const auto& [nc, paraphrase] : examples) {
    out += "Q: what is the meaning of " + nc.surface() + "?\n";
    out += "A:" + paraphrase + "\n";
  }
  out += "Q: what is the meaning of " + target.surface() + "?\n";
  out += "A:";
  return out;
}

namespace {

// Uniform integer in [0, n) by rejection; unlike the standard distributions
// its output is the same on every standard library.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

}  // namespace

std::vector<FewShotExample> sample_fewshot_examples(std::span<const DatasetEntry> pool, std::size_t k,
                                                    std::uint64_t seed, const NounCompound* target) {
  std::vector<const DatasetEntry*> candidates;
  std::set<std::string> seen;
  for (const auto& e : pool) {
    if (target != nullptr && e.nc == *target) continue;
    const bool usable = std::any_of(e.paraphrases.begin(), e.paraphrases.end(),
                                    [](const Paraphrase& p) { return p.label != Label::kIncorrect; });
    if (usable && seen.insert(e.nc.surface()).second) candidates.push_back(&e);
  }
  if (k > candidates.size()) {
    throw UsageError("asked for " + std::to_string(k) + " few-shot examples but only " +
                     std::to_string(candidates.size()) + " compounds are usable");
  }
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + bounded(rng, candidates.size() - i);
    std::swap(candidates[i], candidates[j]);
  }
  std::vector<FewShotExample> out;
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<const Paraphrase*> ok;
    for (const auto& p : candidates[i]->paraphrases) {
      if (p.label != Label::kIncorrect) ok.push_back(&p);
    }
    out.emplace_back(candidates[i]->nc, ok[bounded(rng, ok.size())]->text);
  }
  return out;
}

}  // namespace nctk
