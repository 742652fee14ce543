#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace nctk {

enum class PartOfSpeech { kNoun, kVerb, kAdj, kAdv };

inline constexpr PartOfSpeech kAllPos[] = {PartOfSpeech::kNoun, PartOfSpeech::kVerb,
                                           PartOfSpeech::kAdj, PartOfSpeech::kAdv};

std::string_view pos_file_suffix(PartOfSpeech pos);  // "noun", "verb", "adj", "adv"
// Accepts "n"/"noun", "v"/"verb", "a"/"adj", "r"/"adv".
std::optional<PartOfSpeech> parse_pos(std::string_view s);

// WordNet lexical database parsed from the standard WNDB files
// (index.<pos>, data.<pos>, <pos>.exc). Immutable after load.
class WordNetKB {
 public:
  // Throws DataError naming a missing file and ParseError (file + line) for
  // any malformed line. An empty `version` is taken from the directory name
  // ("wordnet-3.1" -> "3.1") and otherwise defaults to "3.0".
  static WordNetKB load(const std::filesystem::path& dir, std::string version = "");

  WordNetKB(WordNetKB&&) noexcept;
  WordNetKB& operator=(WordNetKB&&) noexcept;
  ~WordNetKB();

  const std::string& version() const;

  // Exact lemma membership in the index of `pos` (no lemmatization).
  bool has_lemma(std::string_view lemma, PartOfSpeech pos) const;
  bool is_noun(std::string_view word) const;  // some morphy candidate is a noun

  std::set<std::string> synonyms(std::string_view lemma, PartOfSpeech pos) const;

  // Exception list first; otherwise the form itself followed by one pass of
  // the detachment rules, keeping only candidates present in the KB.
  std::vector<std::string> morphy(std::string_view form, PartOfSpeech pos) const;

  // Identifiers (part of speech and offset) of every synset reachable from
  // `form` through morphy in any part of speech. Sorted and unique; two words
  // are synonyms when these lists intersect.
  std::vector<std::uint64_t> synset_keys(std::string_view form) const;

  // Irregular forms listed for `lemma` in the exception file ("go" -> went,
  // gone, goes...).
  std::vector<std::string> irregular_forms(std::string_view lemma, PartOfSpeech pos) const;
  bool is_exception_form(std::string_view form, PartOfSpeech pos) const;

  std::size_t lemma_count(PartOfSpeech pos) const;
  std::size_t synset_count(PartOfSpeech pos) const;

  // Synset offsets of an indexed lemma, in index order; empty if unknown.
  std::vector<std::uint32_t> synset_offsets(std::string_view lemma, PartOfSpeech pos) const;
  // Member lemmas of a synset in data-file order. Throws UsageError if the
  // offset is not a synset of `pos`.
  const std::vector<std::string>& synset_members(PartOfSpeech pos, std::uint32_t offset) const;

 private:
  struct Impl;
  explicit WordNetKB(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

}  // namespace nctk
