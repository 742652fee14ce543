#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nctk {

struct Document {
  std::string id;
  std::string text;
};

// Lowercase, NFC-composed tokens. No token is empty or contains whitespace.
using TokenSeq = std::vector<std::string>;

// NFC composition, lowercasing, whitespace splitting, and detaching every
// punctuation character (hyphens included) as its own token.
TokenSeq normalize_text(std::string_view raw);

// Space-joins a token sequence. normalize_text(join_tokens(t)) == t for any
// t produced by normalize_text.
std::string join_tokens(const TokenSeq& tokens);

// Normalized tokens laid out contiguously, separated by single spaces, so a
// window of consecutive tokens is itself a substring. This is the allocation
// free form used on the corpus hot paths.
class TokenBuffer {
 public:
  void clear() {
    text_.clear();
    begin_.clear();
    end_.clear();
  }

  std::size_t size() const { return begin_.size(); }
  bool empty() const { return begin_.empty(); }
  std::string_view joined() const { return text_; }

  std::string_view token(std::size_t i) const {
    return std::string_view(text_).substr(begin_[i], end_[i] - begin_[i]);
  }

  // Tokens [first, first + n) joined by single spaces.
  std::string_view window(std::size_t first, std::size_t n) const {
    return std::string_view(text_).substr(begin_[first],
                                          end_[first + n - 1] - begin_[first]);
  }

  TokenSeq to_tokens() const;

 private:
  friend class Tokenizer;
  std::string text_;
  std::vector<std::uint32_t> begin_;
  std::vector<std::uint32_t> end_;
};

// Reusable normalizer. Holds scratch buffers; one instance per thread.
class Tokenizer {
 public:
  Tokenizer();
  ~Tokenizer();
  Tokenizer(Tokenizer&&) noexcept;
  Tokenizer& operator=(Tokenizer&&) noexcept;

  void normalize_into(std::string_view raw, TokenBuffer& out);

 private:
  struct Scratch;
  std::unique_ptr<Scratch> scratch_;
};

// A token together with casing facts from the raw text, for heuristics that
// need to see capitalization after normalization has erased it.
struct CasedToken {
  std::string text;        // normalized form
  bool capitalized;        // first character was uppercase in the raw text
  bool sentence_initial;   // first token of the text or follows . ! ?
};

std::vector<CasedToken> tokenize_cased(std::string_view raw);

bool is_valid_utf8(std::string_view s);

// Corpus manifest: one shard path per line, blank lines and lines starting
// with '#' ignored. Relative shard paths resolve against the manifest's
// directory. Shards ending in ".gz" are read through zlib.
struct CorpusManifest {
  std::filesystem::path source;
  std::vector<std::filesystem::path> shards;

  static CorpusManifest load(const std::filesystem::path& manifest);
};

// Sequential line reader over one shard. Lines are returned without the
// trailing newline (or "\r\n").
class ShardReader {
 public:
  explicit ShardReader(const std::filesystem::path& shard);
  ~ShardReader();
  ShardReader(const ShardReader&) = delete;
  ShardReader& operator=(const ShardReader&) = delete;

  bool next_line(std::string& line);
  std::size_t line_number() const { return line_no_; }

 private:
  bool fill();

  std::filesystem::path path_;
  void* handle_ = nullptr;  // FILE* or gzFile
  bool gz_ = false;
  std::vector<char> buf_;
  std::size_t pos_ = 0;
  std::size_t len_ = 0;
  bool eof_ = false;
  std::size_t line_no_ = 0;
};

// Per-shard ingestion summary.
struct ShardStats {
  std::size_t documents = 0;
  std::size_t malformed = 0;
  std::uint64_t bytes = 0;
};

// Reads every well-formed line of one shard as a Document with id
// "<shard ordinal>:<line number>". Lines that are not valid UTF-8 are skipped
// and counted. If `content_digest` is non-null it receives the SHA-256 of the
// shard's line content (each line plus '\n'), malformed lines included.
ShardStats read_shard(const std::filesystem::path& shard, std::size_t ordinal,
                      const std::function<void(const Document&)>& sink,
                      std::string* content_digest = nullptr);

// Streams documents of every shard in manifest order.
class DocumentStream {
 public:
  explicit DocumentStream(CorpusManifest manifest);
  ~DocumentStream();
  DocumentStream(DocumentStream&&) noexcept;
  DocumentStream& operator=(DocumentStream&&) noexcept;

  std::optional<Document> next();
  std::size_t malformed_lines() const { return malformed_; }

 private:
  CorpusManifest manifest_;
  std::size_t shard_ = 0;
  std::unique_ptr<ShardReader> reader_;
  std::string line_;
  std::size_t malformed_ = 0;
};

DocumentStream iter_documents(const std::filesystem::path& manifest);

}  // namespace nctk
