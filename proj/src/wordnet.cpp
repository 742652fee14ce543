#include "nctk/wordnet.hpp"

#include <absl/container/flat_hash_map.h>
#include <absl/hash/hash.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <regex>
#include <span>
#include <sstream>

#include "nctk/errors.hpp"

namespace nctk {
namespace fs = std::filesystem;

std::string_view pos_file_suffix(PartOfSpeech pos) {
  switch (pos) {
    case PartOfSpeech::kNoun:
      return "noun";
    case PartOfSpeech::kVerb:
      return "verb";
    case PartOfSpeech::kAdj:
      return "adj";
    case PartOfSpeech::kAdv:
      return "adv";
  }
  return "";
}

std::optional<PartOfSpeech> parse_pos(std::string_view s) {
  if (s == "n" || s == "noun") return PartOfSpeech::kNoun;
  if (s == "v" || s == "verb") return PartOfSpeech::kVerb;
  if (s == "a" || s == "adj" || s == "s") return PartOfSpeech::kAdj;
  if (s == "r" || s == "adv") return PartOfSpeech::kAdv;
  return std::nullopt;
}

namespace {

struct Rule {
  std::string_view suffix;
  std::string_view ending;
};

// Detachment rules of the reference morphological processor.
constexpr std::array<Rule, 8> kNounRules = {{{"s", ""},
                                             {"ses", "s"},
                                             {"xes", "x"},
                                             {"zes", "z"},
                                             {"ches", "ch"},
                                             {"shes", "sh"},
                                             {"men", "man"},
                                             {"ies", "y"}}};
constexpr std::array<Rule, 8> kVerbRules = {{{"s", ""},
                                             {"ies", "y"},
                                             {"es", "e"},
                                             {"es", ""},
                                             {"ed", "e"},
                                             {"ed", ""},
                                             {"ing", "e"},
                                             {"ing", ""}}};
constexpr std::array<Rule, 4> kAdjRules = {{{"er", ""}, {"est", ""}, {"er", "e"}, {"est", "e"}}};

std::span<const Rule> rules_for(PartOfSpeech pos) {
  switch (pos) {
    case PartOfSpeech::kNoun:
      return kNounRules;
    case PartOfSpeech::kVerb:
      return kVerbRules;
    case PartOfSpeech::kAdj:
      return kAdjRules;
    case PartOfSpeech::kAdv:
      return {};
  }
  return {};
}

char pos_char(PartOfSpeech pos) {
  switch (pos) {
    case PartOfSpeech::kNoun:
      return 'n';
    case PartOfSpeech::kVerb:
      return 'v';
    case PartOfSpeech::kAdj:
      return 'a';
    case PartOfSpeech::kAdv:
      return 'r';
  }
  return '?';
}

std::size_t pos_slot(PartOfSpeech pos) { return static_cast<std::size_t>(pos); }

std::string read_whole(const fs::path& path, std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing " + std::string(what) + " file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out, int base = 10) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out, base);
  return ec == std::errc() && p == s.data() + s.size();
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

// Strips the adjective position marker "(a)", "(p)" or "(ip)".
std::string_view strip_adj_marker(std::string_view word) {
  for (std::string_view m : {"(a)", "(p)", "(ip)"}) {
    if (word.size() > m.size() && word.substr(word.size() - m.size()) == m) {
      return word.substr(0, word.size() - m.size());
    }
  }
  return word;
}

// Calls fn(line, line_number, byte_offset) for every line of `text`.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    const bool terminated = end != std::string_view::npos;
    if (!terminated) end = text.size();
    ++line_no;
    fn(text.substr(pos, end - pos), line_no, pos, terminated);
    pos = end + 1;
  }
}

// Transparent functors so maps keyed by std::string accept std::string_view.
struct SvHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const {
    return absl::Hash<absl::string_view>{}(absl::string_view(s.data(), s.size()));
  }
};
struct SvEq {
  using is_transparent = void;
  bool operator()(std::string_view a, std::string_view b) const { return a == b; }
};

template <typename V>
using StringMap = absl::flat_hash_map<std::string, V, SvHash, SvEq>;

bool is_license_line(std::string_view line) { return line.size() >= 2 && line[0] == ' ' && line[1] == ' '; }

}  // namespace

struct WordNetKB::Impl {
  struct PosData {
    StringMap<std::vector<std::uint32_t>> index;
    absl::flat_hash_map<std::uint32_t, std::vector<std::string>> synsets;
    StringMap<std::vector<std::string>> exceptions;
    StringMap<std::vector<std::string>> irregular;
  };

  std::string version;
  std::array<PosData, 4> data;

  const PosData& at(PartOfSpeech pos) const { return data[pos_slot(pos)]; }

  void load_data(const fs::path& path, PartOfSpeech pos);
  void load_index(const fs::path& path, PartOfSpeech pos);
  void load_exceptions(const fs::path& path, PartOfSpeech pos);
};

void WordNetKB::Impl::load_data(const fs::path& path, PartOfSpeech pos) {
  const std::string text = read_whole(path, "data");
  PosData& pd = data[pos_slot(pos)];
  const std::string file = path.string();
  for_each_line(text, [&](std::string_view line, std::size_t line_no, std::size_t offset,
                          bool terminated) {
    if (is_license_line(line)) return;
    auto fail = [&](const std::string& why) { throw ParseError(file, line_no, why); };
    if (!terminated) fail("truncated record (no trailing newline)");
    const std::size_t bar = line.find(" | ");
    if (bar == std::string_view::npos) fail("record has no gloss separator");
    const auto tok = split_ws(line.substr(0, bar));
    if (tok.size() < 6) fail("record too short");
    std::uint32_t off = 0;
    if (tok[0].size() != 8 || !parse_number(tok[0], off)) fail("bad synset offset '" + std::string(tok[0]) + "'");
    if (off != offset) {
      fail("synset offset " + std::string(tok[0]) + " does not match byte position " +
           std::to_string(offset));
    }
    const char ss = tok[2].size() == 1 ? tok[2][0] : '?';
    const bool type_ok = pos == PartOfSpeech::kAdj ? (ss == 'a' || ss == 's') : ss == pos_char(pos);
    if (!type_ok) fail("unexpected synset type '" + std::string(tok[2]) + "'");
    unsigned w_cnt = 0;
    if (!parse_number(tok[3], w_cnt, 16) || w_cnt == 0) fail("bad word count");
    std::size_t i = 4;
    if (tok.size() < i + 2 * w_cnt + 1) fail("record shorter than its word count");
    std::vector<std::string> members;
    members.reserve(w_cnt);
    for (unsigned w = 0; w < w_cnt; ++w, i += 2) {
      std::string lemma = lower_ascii(strip_adj_marker(tok[i]));
      if (std::find(members.begin(), members.end(), lemma) == members.end()) {
        members.push_back(std::move(lemma));
      }
    }
    unsigned p_cnt = 0;
    if (!parse_number(tok[i], p_cnt)) fail("bad pointer count");
    ++i;
    if (tok.size() < i + 4 * p_cnt) fail("record shorter than its pointer count");
    i += 4 * p_cnt;
    if (pos == PartOfSpeech::kVerb && i < tok.size()) {
      unsigned f_cnt = 0;
      if (!parse_number(tok[i], f_cnt)) fail("bad frame count");
      ++i;
      i += 3 * f_cnt;
    }
    if (i != tok.size()) fail("unexpected trailing fields before gloss");
    if (!pd.synsets.emplace(off, std::move(members)).second) fail("duplicate synset offset");
  });
}

void WordNetKB::Impl::load_index(const fs::path& path, PartOfSpeech pos) {
  const std::string text = read_whole(path, "index");
  PosData& pd = data[pos_slot(pos)];
  const std::string file = path.string();
  for_each_line(text, [&](std::string_view line, std::size_t line_no, std::size_t,
                          bool terminated) {
    if (is_license_line(line)) return;
    auto fail = [&](const std::string& why) { throw ParseError(file, line_no, why); };
    if (!terminated) fail("truncated index line (no trailing newline)");
    const auto tok = split_ws(line);
    if (tok.size() < 6) fail("index line too short");
    if (tok[1].size() != 1 || tok[1][0] != pos_char(pos)) fail("wrong part of speech '" + std::string(tok[1]) + "'");
    unsigned synset_cnt = 0;
    unsigned p_cnt = 0;
    if (!parse_number(tok[2], synset_cnt) || synset_cnt == 0) fail("bad synset count");
    if (!parse_number(tok[3], p_cnt)) fail("bad pointer count");
    if (tok.size() != 4 + p_cnt + 2 + synset_cnt) fail("field count does not match declared counts");
    std::vector<std::uint32_t> offsets;
    offsets.reserve(synset_cnt);
    for (std::size_t k = 4 + p_cnt + 2; k < tok.size(); ++k) {
      std::uint32_t off = 0;
      if (tok[k].size() != 8 || !parse_number(tok[k], off)) fail("bad synset offset");
      if (!pd.synsets.contains(off)) {
        fail("offset " + std::string(tok[k]) + " has no record in the data file");
      }
      offsets.push_back(off);
    }
    const std::string lemma = lower_ascii(tok[0]);
    if (!pd.index.emplace(lemma, std::move(offsets)).second) fail("duplicate lemma '" + lemma + "'");
  });
}

void WordNetKB::Impl::load_exceptions(const fs::path& path, PartOfSpeech pos) {
  const std::string text = read_whole(path, "exception");
  PosData& pd = data[pos_slot(pos)];
  for_each_line(text, [&](std::string_view line, std::size_t line_no, std::size_t, bool) {
    const auto tok = split_ws(line);
    if (tok.empty()) return;
    if (tok.size() < 2) throw ParseError(path.string(), line_no, "exception entry without a lemma");
    const std::string form = lower_ascii(tok[0]);
    auto& lemmas = pd.exceptions[form];
    for (std::size_t k = 1; k < tok.size(); ++k) {
      std::string lemma = lower_ascii(tok[k]);
      auto& forms = pd.irregular[lemma];
      if (std::find(forms.begin(), forms.end(), form) == forms.end()) forms.push_back(form);
      lemmas.push_back(std::move(lemma));
    }
  });
}

WordNetKB::WordNetKB(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
WordNetKB::WordNetKB(WordNetKB&&) noexcept = default;
WordNetKB& WordNetKB::operator=(WordNetKB&&) noexcept = default;
WordNetKB::~WordNetKB() = default;

WordNetKB WordNetKB::load(const fs::path& dir, std::string version) {
  if (!fs::is_directory(dir)) throw DataError("WordNet directory not found: " + dir.string());
  auto impl = std::make_unique<Impl>();
  for (PartOfSpeech pos : kAllPos) {
    const std::string suffix(pos_file_suffix(pos));
    if (!fs::exists(dir / ("index." + suffix))) {
      throw DataError("missing index file " + (dir / ("index." + suffix)).string());
    }
  }
  for (PartOfSpeech pos : kAllPos) {
    const std::string suffix(pos_file_suffix(pos));
    impl->load_data(dir / ("data." + suffix), pos);
    impl->load_index(dir / ("index." + suffix), pos);
    impl->load_exceptions(dir / (suffix + ".exc"), pos);
  }
  if (version.empty()) {
    static const std::regex kVersioned(R"(wordnet[-_]?(\d+(?:\.\d+)*))", std::regex::icase);
    std::smatch m;
    const std::string name = fs::absolute(dir).lexically_normal().filename().string();
    const std::string leaf = name.empty() ? fs::absolute(dir).parent_path().filename().string() : name;
    version = std::regex_search(leaf, m, kVersioned) ? m[1].str() : "3.0";
  }
  impl->version = std::move(version);
  return WordNetKB(std::move(impl));
}

const std::string& WordNetKB::version() const { return impl_->version; }

bool WordNetKB::has_lemma(std::string_view lemma, PartOfSpeech pos) const {
  return impl_->at(pos).index.contains(lemma);
}

bool WordNetKB::is_noun(std::string_view word) const {
  return !word.empty() && !morphy(word, PartOfSpeech::kNoun).empty();
}

std::set<std::string> WordNetKB::synonyms(std::string_view lemma, PartOfSpeech pos) const {
  std::set<std::string> out;
  const auto& pd = impl_->at(pos);
  auto it = pd.index.find(lemma);
  if (it == pd.index.end()) return out;
  for (std::uint32_t off : it->second) {
    for (const auto& m : pd.synsets.at(off)) {
      if (m != lemma) out.insert(m);
    }
  }
  return out;
}

std::vector<std::string> WordNetKB::morphy(std::string_view form, PartOfSpeech pos) const {
  std::vector<std::string> out;
  if (form.empty()) return out;
  const auto& pd = impl_->at(pos);
  auto keep = [&](std::string candidate) {
    if (pd.index.contains(candidate) &&
        std::find(out.begin(), out.end(), candidate) == out.end()) {
      out.push_back(std::move(candidate));
    }
  };
  if (auto exc = pd.exceptions.find(form); exc != pd.exceptions.end()) {
    keep(std::string(form));
    for (const auto& lemma : exc->second) keep(lemma);
    return out;
  }
  keep(std::string(form));
  for (const Rule& r : rules_for(pos)) {
    if (form.size() > r.suffix.size() && form.substr(form.size() - r.suffix.size()) == r.suffix) {
      std::string candidate(form.substr(0, form.size() - r.suffix.size()));
      candidate += r.ending;
      keep(std::move(candidate));
    }
  }
  return out;
}

std::vector<std::uint64_t> WordNetKB::synset_keys(std::string_view form) const {
  std::vector<std::uint64_t> out;
  for (PartOfSpeech pos : kAllPos) {
    const auto& pd = impl_->at(pos);
    for (const auto& lemma : morphy(form, pos)) {
      for (std::uint32_t off : pd.index.find(lemma)->second) {
        out.push_back((static_cast<std::uint64_t>(pos_slot(pos)) << 32) | off);
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::string> WordNetKB::irregular_forms(std::string_view lemma, PartOfSpeech pos) const {
  const auto& pd = impl_->at(pos);
  auto it = pd.irregular.find(lemma);
  return it == pd.irregular.end() ? std::vector<std::string>{} : it->second;
}

bool WordNetKB::is_exception_form(std::string_view form, PartOfSpeech pos) const {
  return impl_->at(pos).exceptions.contains(form);
}

std::size_t WordNetKB::lemma_count(PartOfSpeech pos) const { return impl_->at(pos).index.size(); }
std::size_t WordNetKB::synset_count(PartOfSpeech pos) const { return impl_->at(pos).synsets.size(); }

std::vector<std::uint32_t> WordNetKB::synset_offsets(std::string_view lemma, PartOfSpeech pos) const {
  const auto& pd = impl_->at(pos);
  auto it = pd.index.find(lemma);
  return it == pd.index.end() ? std::vector<std::uint32_t>{} : it->second;
}

const std::vector<std::string>& WordNetKB::synset_members(PartOfSpeech pos, std::uint32_t offset) const {
  const auto& pd = impl_->at(pos);
  auto it = pd.synsets.find(offset);
  if (it == pd.synsets.end()) {
    throw UsageError("no " + std::string(pos_file_suffix(pos)) + " synset at offset " +
                     std::to_string(offset));
  }
  return it->second;
}

}  // namespace nctk
