#include "nctk/curation.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "nctk/errors.hpp"
#include "nctk/wordnet.hpp"

namespace nctk {

namespace {

constexpr std::array<std::string_view, 3> kRelativizers = {"that", "which", "who"};
constexpr std::array<std::string_view, 4> kCopulas = {"is", "are", "was", "were"};
constexpr std::array<std::string_view, 38> kPrepositions = {
    "of",     "by",      "for",    "from",   "with",    "in",      "on",      "at",
    "to",     "into",    "onto",   "through", "using",  "via",     "about",   "as",
    "over",   "under",   "during", "without", "within", "against", "like",    "near",
    "around", "across",  "after",  "before", "between", "among",   "toward",  "towards",
    "behind", "beyond",  "upon",   "inside", "outside", "throughout"};
constexpr std::array<std::string_view, 3> kAuxiliaryLemmas = {"be", "have", "do"};
constexpr std::array<std::string_view, 9> kModals = {"can",   "could", "may",  "might", "must",
                                                     "shall", "should", "will", "would"};

template <std::size_t N>
bool one_of(std::string_view s, const std::array<std::string_view, N>& set) {
  return std::find(set.begin(), set.end(), s) != set.end();
}

bool starts_with_seq(const TokenSeq& t, std::size_t at, const TokenSeq& prefix) {
  if (at + prefix.size() > t.size()) return false;
  return std::equal(prefix.begin(), prefix.end(), t.begin() + static_cast<std::ptrdiff_t>(at));
}

// Middle tokens when `t` is "<head> ... <modifier>".
std::optional<TokenSeq> frame_middle(const TokenSeq& t, const NounCompound& nc) {
  const TokenSeq head = normalize_text(nc.head);
  const TokenSeq mod = normalize_text(nc.modifier);
  if (head.empty() || mod.empty() || t.size() < head.size() + mod.size()) return std::nullopt;
  if (!starts_with_seq(t, 0, head) || !starts_with_seq(t, t.size() - mod.size(), mod))
    return std::nullopt;
  return TokenSeq(t.begin() + static_cast<std::ptrdiff_t>(head.size()),
                  t.end() - static_cast<std::ptrdiff_t>(mod.size()));
}

bool ends_with(std::string_view s, std::string_view suf) {
  return s.size() >= suf.size() && s.substr(s.size() - suf.size()) == suf;
}

bool vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

enum class Inflection { kBase, kS, kEd, kIng };

Inflection inflection_of(std::string_view surface, const WordNetKB& kb) {
  if (kb.is_exception_form(surface, PartOfSpeech::kVerb)) {
    if (ends_with(surface, "ing")) return Inflection::kIng;
    if (ends_with(surface, "s") && !ends_with(surface, "ss")) return Inflection::kS;
    return Inflection::kEd;
  }
  if (kb.has_lemma(surface, PartOfSpeech::kVerb)) return Inflection::kBase;
  if (ends_with(surface, "ing")) return Inflection::kIng;
  if (ends_with(surface, "ed")) return Inflection::kEd;
  if (ends_with(surface, "s")) return Inflection::kS;
  return Inflection::kBase;
}

std::string inflect_word(const std::string& lemma, Inflection inf, const WordNetKB& kb) {
  if (inf == Inflection::kBase || lemma.empty()) return lemma;
  for (const auto& form : kb.irregular_forms(lemma, PartOfSpeech::kVerb)) {
    const bool ing = ends_with(form, "ing");
    const bool s = ends_with(form, "s") && !ends_with(form, "ss");
    if ((inf == Inflection::kIng && ing) || (inf == Inflection::kS && s) ||
        (inf == Inflection::kEd && !ing && !s))
      return form;
  }
  const char last = lemma.back();
  const bool cons_y = last == 'y' && lemma.size() > 1 && !vowel(lemma[lemma.size() - 2]);
  switch (inf) {
    case Inflection::kS:
      if (cons_y) return lemma.substr(0, lemma.size() - 1) + "ies";
      if (last == 's' || last == 'x' || last == 'z' || ends_with(lemma, "ch") || ends_with(lemma, "sh"))
        return lemma + "es";
      return lemma + "s";
    case Inflection::kEd:
      if (last == 'e') return lemma + "d";
      if (cons_y) return lemma.substr(0, lemma.size() - 1) + "ied";
      return lemma + "ed";
    case Inflection::kIng:
      if (ends_with(lemma, "ie")) return lemma.substr(0, lemma.size() - 2) + "ying";
      if (last == 'e' && !ends_with(lemma, "ee") && lemma.size() > 2)
        return lemma.substr(0, lemma.size() - 1) + "ing";
      return lemma + "ing";
    case Inflection::kBase:
      break;
  }
  return lemma;
}

// Multiword lemmas ("get_at") inflect their first word.
std::string inflect(std::string_view lemma, Inflection inf, const WordNetKB& kb) {
  std::string words(lemma);
  std::replace(words.begin(), words.end(), '_', ' ');
  const auto sp = words.find(' ');
  if (sp == std::string::npos) return inflect_word(words, inf, kb);
  return inflect_word(words.substr(0, sp), inf, kb) + words.substr(sp);
}

std::string lower_ascii(std::string s) {
  for (char& c : s)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return s;
}

AugmentCandidate make_candidate(const NounCompound& nc, const TokenSeq& tokens,
                                AugmentProvenance prov, std::string detail) {
  AugmentCandidate c;
  c.nc = nc;
  c.text = join_tokens(tokens);
  c.provenance = prov;
  c.needs_review = true;
  c.detail = std::move(detail);
  return c;
}

struct VerbSlot {
  std::string lemma;
  std::string surface;
  bool passive = false;
};

struct Template {
  TokenSeq head;
  TokenSeq modifier;
  std::string rel;  // empty for a reduced frame
  std::string cop;
  VerbSlot verb;
  std::string prep;
};

std::optional<Template> parse_template(const std::string& text, const NounCompound& nc,
                                       const WordNetKB& kb) {
  const TokenSeq t = normalize_text(canonical_text(text));
  const auto middle = frame_middle(t, nc);
  if (!middle) return std::nullopt;
  Template tp;
  tp.head = normalize_text(nc.head);
  tp.modifier = normalize_text(nc.modifier);
  std::size_t i = 0;
  const TokenSeq& m = *middle;
  if (i < m.size() && one_of(m[i], kRelativizers)) tp.rel = m[i++];
  if (i < m.size() && one_of(m[i], kCopulas)) tp.cop = m[i++];
  if (i >= m.size()) return std::nullopt;
  const auto lemmas = kb.morphy(m[i], PartOfSpeech::kVerb);
  if (lemmas.empty()) return std::nullopt;
  tp.verb.lemma = lemmas.front();
  tp.verb.surface = m[i++];
  if (i < m.size() && one_of(m[i], kPrepositions)) tp.prep = m[i++];
  if (i != m.size()) return std::nullopt;

  const Inflection inf = inflection_of(tp.verb.surface, kb);
  if (tp.rel.empty() && !tp.cop.empty()) return std::nullopt;
  if (tp.rel.empty() && inf != Inflection::kEd && inf != Inflection::kIng) return std::nullopt;
  tp.verb.passive = inf == Inflection::kEd && (!tp.cop.empty() || tp.rel.empty());
  return tp;
}

TokenSeq render(const Template& frame, const VerbSlot& verb, const std::string& prep,
                const WordNetKB& kb) {
  TokenSeq out = frame.head;
  const Inflection inf = inflection_of(verb.surface, kb);
  if (!frame.rel.empty()) {
    out.push_back(frame.rel);
    if (verb.passive || inf == Inflection::kIng) {
      out.push_back(frame.cop.empty() ? "is" : frame.cop);
      out.push_back(verb.passive ? inflect(verb.lemma, Inflection::kEd, kb) : verb.surface);
    } else {
      out.push_back(verb.surface);
    }
  } else if (inf == Inflection::kIng && !verb.passive) {
    out.push_back(verb.surface);
  } else {
    out.push_back(inflect(verb.lemma, Inflection::kEd, kb));
  }
  if (!prep.empty()) out.push_back(prep);
  out.insert(out.end(), frame.modifier.begin(), frame.modifier.end());
  return out;
}

}  // namespace

CatchAllRuleSet CatchAllRuleSet::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot read catch-all rules " + file.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("catch-all rules " + file.string() + ": " + e.what());
  }
  if (!j.is_object()) throw DataError("catch-all rules " + file.string() + ": expected an object");
  CatchAllRuleSet rules;
  for (auto& [key, value] : j.items()) {
    std::vector<std::string>* target = nullptr;
    if (key == "prepositional") {
      target = &rules.prepositional;
    } else if (key == "generic_verbs") {
      target = &rules.generic_verbs;
    } else {
      throw DataError("catch-all rules " + file.string() + ": unknown key '" + key + "'");
    }
    if (!value.is_array()) throw DataError("catch-all rules " + file.string() + ": '" + key + "' must be a list");
    target->clear();
    for (const auto& v : value) {
      if (!v.is_string()) throw DataError("catch-all rules " + file.string() + ": '" + key + "' must hold strings");
      const std::string words = join_tokens(normalize_text(v.get<std::string>()));
      if (words.empty()) throw DataError("catch-all rules " + file.string() + ": empty template in '" + key + "'");
      target->push_back(words);
    }
  }
  return rules;
}

bool is_catch_all(const TokenSeq& paraphrase, const NounCompound& nc, const CatchAllRuleSet& rules) {
  const auto middle = frame_middle(paraphrase, nc);
  if (!middle || middle->empty()) return false;
  const std::string joined = join_tokens(*middle);
  for (const auto& p : rules.prepositional)
    if (joined == join_tokens(normalize_text(p))) return true;

  std::size_t i = 0;
  const TokenSeq& m = *middle;
  if (i < m.size() && one_of(m[i], kRelativizers)) ++i;
  if (i < m.size() && one_of(m[i], kCopulas)) ++i;
  const std::string rest = join_tokens(TokenSeq(m.begin() + static_cast<std::ptrdiff_t>(i), m.end()));
  for (const auto& v : rules.generic_verbs)
    if (rest == join_tokens(normalize_text(v))) return true;
  return false;
}

bool is_catch_all(std::string_view paraphrase, const NounCompound& nc, const CatchAllRuleSet& rules) {
  return is_catch_all(normalize_text(canonical_text(paraphrase)), nc, rules);
}

std::vector<NounCompound> find_split_overlap(std::span<const DatasetEntry> train,
                                             std::span<const DatasetEntry> test) {
  std::set<NounCompound> a;
  for (const auto& e : train) a.insert(e.nc);
  std::set<NounCompound> both;
  for (const auto& e : test)
    if (a.contains(e.nc)) both.insert(e.nc);
  return {both.begin(), both.end()};
}

std::string_view to_string(LintRule r) {
  switch (r) {
    case LintRule::kSplitOverlap: return "split_overlap";
    case LintRule::kCatchAll: return "catch_all";
    case LintRule::kDuplicate: return "duplicate";
    case LintRule::kNormalization: return "normalization";
  }
  return "?";
}

std::string_view to_string(LintAction a) {
  switch (a) {
    case LintAction::kRemove: return "remove";
    case LintAction::kFix: return "fix";
    case LintAction::kReview: return "review";
  }
  return "?";
}

std::string_view to_string(AugmentProvenance p) {
  return p == AugmentProvenance::kMerge ? "merge" : "synonym_substitution";
}

std::vector<LintFinding> lint(std::span<const DatasetEntry> entries, const CatchAllRuleSet& rules) {
  std::set<NounCompound> train;
  for (const auto& e : entries)
    if (e.split == Split::kTrain) train.insert(e.nc);

  std::vector<LintFinding> out;
  for (const auto& e : entries) {
    if (e.split == Split::kTest && train.contains(e.nc)) {
      out.push_back({e.nc, e.split, kWholeEntry, "", LintRule::kSplitOverlap, LintAction::kRemove,
                     "compound also in train"});
      continue;
    }
    std::map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < e.paraphrases.size(); ++i) {
      const std::string& text = e.paraphrases[i].text;
      const auto finding = [&](LintRule rule, LintAction action, std::string detail) {
        out.push_back({e.nc, e.split, i, text, rule, action, std::move(detail)});
      };
      const std::string fixed = canonical_text(text);
      if (fixed.empty()) {
        finding(LintRule::kNormalization, LintAction::kRemove, "empty after normalization");
        continue;
      }
      const std::string key = join_tokens(normalize_text(fixed));
      if (auto [it, fresh] = seen.emplace(key, i); !fresh) {
        finding(LintRule::kDuplicate, LintAction::kRemove,
                "duplicate of paraphrase " + std::to_string(it->second));
        continue;
      }
      if (is_catch_all(normalize_text(fixed), e.nc, rules)) {
        finding(LintRule::kCatchAll, LintAction::kRemove, "generic paraphrase");
        continue;
      }
      if (fixed != text) finding(LintRule::kNormalization, LintAction::kFix, fixed);
    }
  }
  return out;
}

std::vector<DatasetEntry> apply_findings(std::span<const DatasetEntry> entries,
                                         std::span<const LintFinding> findings) {
  struct Edits {
    bool drop = false;
    std::set<std::size_t> remove;
    std::map<std::size_t, std::string> fix;
  };
  std::map<std::pair<Split, NounCompound>, Edits> edits;
  for (const auto& f : findings) {
    auto& ed = edits[{f.split, f.nc}];
    if (f.action == LintAction::kReview) continue;
    if (f.paraphrase_index == kWholeEntry) {
      if (f.action == LintAction::kRemove) ed.drop = true;
    } else if (f.action == LintAction::kRemove) {
      ed.remove.insert(f.paraphrase_index);
    } else {
      ed.fix[f.paraphrase_index] = f.detail;
    }
  }

  std::vector<DatasetEntry> out;
  for (const auto& e : entries) {
    auto it = edits.find({e.split, e.nc});
    if (it == edits.end()) {
      out.push_back(e);
      continue;
    }
    const Edits& ed = it->second;
    if (ed.drop) continue;
    for (std::size_t i : ed.remove)
      if (i >= e.paraphrases.size())
        throw UsageError("finding for '" + e.nc.surface() + "' names paraphrase " + std::to_string(i) +
                         " of " + std::to_string(e.paraphrases.size()));
    DatasetEntry copy = e;
    copy.paraphrases.clear();
    for (std::size_t i = 0; i < e.paraphrases.size(); ++i) {
      if (ed.remove.contains(i)) continue;
      Paraphrase p = e.paraphrases[i];
      if (auto f = ed.fix.find(i); f != ed.fix.end()) p.text = f->second;
      copy.paraphrases.push_back(std::move(p));
    }
    out.push_back(std::move(copy));
  }
  return out;
}

std::string serialize_finding(const LintFinding& f) {
  nlohmann::ordered_json j;
  j["nc"] = f.nc.surface();
  j["split"] = std::string(to_string(f.split));
  if (f.paraphrase_index == kWholeEntry) {
    j["index"] = nullptr;
  } else {
    j["index"] = f.paraphrase_index;
  }
  j["paraphrase"] = f.paraphrase;
  j["rule"] = std::string(to_string(f.rule));
  j["action"] = std::string(to_string(f.action));
  j["detail"] = f.detail;
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::string reinflect(std::string_view lemma, std::string_view surface, const WordNetKB& kb) {
  return inflect(lemma, inflection_of(surface, kb), kb);
}

std::vector<AugmentCandidate> synonym_expand(const DatasetEntry& entry, const WordNetKB& kb) {
  std::set<std::string> known;
  for (const auto& p : entry.paraphrases) known.insert(paraphrase_key(p.text));
  TokenSeq protected_tokens = normalize_text(entry.nc.head);
  for (auto& t : normalize_text(entry.nc.modifier)) protected_tokens.push_back(std::move(t));

  std::vector<AugmentCandidate> out;
  for (const auto& p : entry.paraphrases) {
    if (p.label == Label::kIncorrect) continue;
    const TokenSeq tokens = normalize_text(canonical_text(p.text));
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const std::string& tok = tokens[i];
      if (std::find(protected_tokens.begin(), protected_tokens.end(), tok) != protected_tokens.end()) continue;
      if (one_of(tok, kModals)) continue;
      const auto lemmas = kb.morphy(tok, PartOfSpeech::kVerb);
      if (lemmas.empty()) continue;
      if (std::any_of(lemmas.begin(), lemmas.end(), [](const std::string& l) { return one_of(l, kAuxiliaryLemmas); }))
        continue;
      std::set<std::string> syns;
      for (const auto& l : lemmas)
        for (const auto& s : kb.synonyms(l, PartOfSpeech::kVerb)) syns.insert(lower_ascii(s));
      for (const auto& l : lemmas) syns.erase(l);

      const Inflection inf = inflection_of(tok, kb);
      for (const auto& s : syns) {
        const std::string form = inflect(s, inf, kb);
        TokenSeq cand(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(i));
        for (auto& w : normalize_text(form)) cand.push_back(std::move(w));
        cand.insert(cand.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i) + 1, tokens.end());
        if (!known.insert(join_tokens(cand)).second) continue;
        out.push_back(make_candidate(entry.nc, cand, AugmentProvenance::kSynonymSubstitution, tok + " -> " + form));
      }
    }
  }
  return out;
}

std::vector<AugmentCandidate> merge_paraphrases(const Paraphrase& p1, const Paraphrase& p2,
                                                const NounCompound& nc, const WordNetKB& kb) {
  const auto t1 = parse_template(p1.text, nc, kb);
  const auto t2 = parse_template(p2.text, nc, kb);
  if (!t1 || !t2) return {};
  const std::array<const Template*, 2> tp = {&*t1, &*t2};
  std::set<std::string> seen = {paraphrase_key(p1.text), paraphrase_key(p2.text)};
  std::vector<AugmentCandidate> out;
  for (const Template* frame : tp) {
    for (const Template* verb : tp) {
      for (const Template* prep : tp) {
        const TokenSeq t = render(*frame, verb->verb, prep->prep, kb);
        if (!seen.insert(join_tokens(t)).second) continue;
        out.push_back(make_candidate(nc, t, AugmentProvenance::kMerge,
                                     canonical_text(p1.text) + " + " + canonical_text(p2.text)));
      }
    }
  }
  return out;
}

std::vector<AugmentCandidate> augment_entry(const DatasetEntry& entry, const WordNetKB& kb) {
  std::set<std::string> known;
  for (const auto& p : entry.paraphrases) known.insert(paraphrase_key(p.text));
  std::vector<AugmentCandidate> out;
  const auto take = [&](std::vector<AugmentCandidate> batch) {
    for (auto& c : batch)
      if (known.insert(paraphrase_key(c.text)).second) out.push_back(std::move(c));
  };
  take(synonym_expand(entry, kb));
  const auto& ps = entry.paraphrases;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (ps[i].label == Label::kIncorrect) continue;
    for (std::size_t j = i + 1; j < ps.size(); ++j) {
      if (ps[j].label == Label::kIncorrect) continue;
      take(merge_paraphrases(ps[i], ps[j], entry.nc, kb));
    }
  }
  return out;
}

std::vector<DatasetEntry> review_queue(std::span<const AugmentCandidate> candidates, Split split) {
  std::vector<DatasetEntry> out;
  std::map<NounCompound, std::size_t> slot;
  for (const auto& c : candidates) {
    auto [it, fresh] = slot.emplace(c.nc, out.size());
    if (fresh) out.push_back({c.nc, {}, split});
    out[it->second].paraphrases.push_back({c.text, Source::kAugmented, Label::kUnjudged, std::nullopt});
  }
  return out;
}

}  // namespace nctk
