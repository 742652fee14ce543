#include "nctk/corpus_io.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>
#include <zlib.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "nctk/digest.hpp"
#include "nctk/errors.hpp"

namespace nctk {
namespace {

constexpr bool ascii_space(unsigned char c) {
  // Control characters separate tokens like whitespace does.
  return c <= 0x20 || c == 0x7F;
}

constexpr bool ascii_punct(unsigned char c) {
  return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
         (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
}

bool is_ascii(std::string_view s) {
  unsigned char acc = 0;
  for (char c : s) acc |= static_cast<unsigned char>(c);
  return acc < 0x80;
}

bool cp_space(UChar32 c) {
  if (c < 0x80) return ascii_space(static_cast<unsigned char>(c));
  return u_isUWhiteSpace(c) || u_iscntrl(c);
}

bool cp_punct(UChar32 c) {
  if (c < 0x80) return ascii_punct(static_cast<unsigned char>(c));
  return u_ispunct(c);
}

const icu::Normalizer2& nfc() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || n == nullptr) {
    throw Error(std::string("icu: NFC normalizer unavailable: ") + u_errorName(status));
  }
  return *n;
}

icu::UnicodeString compose(const icu::UnicodeString& s) {
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString out = nfc().normalize(s, status);
  if (U_FAILURE(status)) {
    throw Error(std::string("icu: normalization failed: ") + u_errorName(status));
  }
  return out;
}

// A raw (not yet lowercased) token as a code unit range of a UTF-16 string.
struct Span16 {
  int32_t begin;
  int32_t end;
};

std::vector<Span16> split16(const icu::UnicodeString& s) {
  std::vector<Span16> spans;
  int32_t start = -1;
  for (int32_t i = 0; i < s.length();) {
    UChar32 c = s.char32At(i);
    int32_t next = i + U16_LENGTH(c);
    if (cp_space(c)) {
      if (start >= 0) spans.push_back({start, i});
      start = -1;
    } else if (cp_punct(c)) {
      if (start >= 0) spans.push_back({start, i});
      spans.push_back({i, next});
      start = -1;
    } else if (start < 0) {
      start = i;
    }
    i = next;
  }
  if (start >= 0) spans.push_back({start, s.length()});
  return spans;
}

std::string lower_token(const icu::UnicodeString& s, Span16 span) {
  icu::UnicodeString piece(s, span.begin, span.end - span.begin);
  piece.toLower(icu::Locale::getRoot());
  std::string out;
  compose(piece).toUTF8String(out);
  return out;
}

bool cp_upper(UChar32 c) { return u_isupper(c) || u_istitle(c); }

}  // namespace

struct Tokenizer::Scratch {
  std::string token;
};

Tokenizer::Tokenizer() : scratch_(std::make_unique<Scratch>()) {}
Tokenizer::~Tokenizer() = default;
Tokenizer::Tokenizer(Tokenizer&&) noexcept = default;
Tokenizer& Tokenizer::operator=(Tokenizer&&) noexcept = default;

void Tokenizer::normalize_into(std::string_view raw, TokenBuffer& out) {
  out.clear();
  auto push = [&out](std::string_view tok) {
    if (!out.text_.empty()) out.text_.push_back(' ');
    out.begin_.push_back(static_cast<std::uint32_t>(out.text_.size()));
    out.text_.append(tok);
    out.end_.push_back(static_cast<std::uint32_t>(out.text_.size()));
  };

  if (is_ascii(raw)) {
    out.text_.reserve(raw.size() + raw.size() / 8);
    std::size_t i = 0;
    const std::size_t n = raw.size();
    while (i < n) {
      const auto c = static_cast<unsigned char>(raw[i]);
      if (ascii_space(c)) {
        ++i;
        continue;
      }
      if (ascii_punct(c)) {
        push(raw.substr(i, 1));
        ++i;
        continue;
      }
      if (!out.text_.empty()) out.text_.push_back(' ');
      out.begin_.push_back(static_cast<std::uint32_t>(out.text_.size()));
      while (i < n) {
        const auto d = static_cast<unsigned char>(raw[i]);
        if (ascii_space(d) || ascii_punct(d)) break;
        out.text_.push_back(static_cast<char>(d >= 'A' && d <= 'Z' ? d + 32 : d));
        ++i;
      }
      out.end_.push_back(static_cast<std::uint32_t>(out.text_.size()));
    }
    return;
  }

  icu::UnicodeString composed = compose(
      icu::UnicodeString::fromUTF8(icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size()))));
  for (Span16 span : split16(composed)) {
    scratch_->token = lower_token(composed, span);
    push(scratch_->token);
  }
}

TokenSeq TokenBuffer::to_tokens() const {
  TokenSeq out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.emplace_back(token(i));
  return out;
}

TokenSeq normalize_text(std::string_view raw) {
  Tokenizer tokenizer;
  TokenBuffer buf;
  tokenizer.normalize_into(raw, buf);
  return buf.to_tokens();
}

std::string join_tokens(const TokenSeq& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

std::vector<CasedToken> tokenize_cased(std::string_view raw) {
  std::vector<CasedToken> out;
  icu::UnicodeString composed = compose(
      icu::UnicodeString::fromUTF8(icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size()))));
  bool boundary = true;
  for (Span16 span : split16(composed)) {
    CasedToken tok;
    tok.text = lower_token(composed, span);
    tok.capitalized = cp_upper(composed.char32At(span.begin));
    tok.sentence_initial = boundary;
    boundary = tok.text == "." || tok.text == "!" || tok.text == "?";
    out.push_back(std::move(tok));
  }
  return out;
}

bool is_valid_utf8(std::string_view s) {
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  const auto len = static_cast<int32_t>(s.size());
  int32_t i = 0;
  while (i < len) {
    if (p[i] < 0x80) {
      ++i;
      continue;
    }
    UChar32 c;
    U8_NEXT(p, i, len, c);
    if (c < 0) return false;
  }
  return true;
}

CorpusManifest CorpusManifest::load(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw DataError("cannot read corpus manifest " + manifest.string());
  CorpusManifest m;
  m.source = manifest;
  const auto base = manifest.parent_path();
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    auto last = line.find_last_not_of(" \t");
    std::filesystem::path shard(line.substr(first, last - first + 1));
    if (!shard.is_absolute()) shard = base / shard;
    if (!std::filesystem::is_regular_file(shard)) {
      throw DataError("corpus manifest " + manifest.string() + " lists missing shard " +
                      shard.string());
    }
    m.shards.push_back(std::move(shard));
  }
  return m;
}

ShardReader::ShardReader(const std::filesystem::path& shard)
    : path_(shard), gz_(shard.extension() == ".gz"), buf_(1 << 20) {
  if (gz_) {
    gzFile f = gzopen(shard.c_str(), "rb");
    if (f == nullptr) {
      throw DataError("cannot read shard " + shard.string() + ": " + std::strerror(errno));
    }
    gzbuffer(f, 1 << 18);
    handle_ = f;
  } else {
    std::FILE* f = std::fopen(shard.c_str(), "rb");
    if (f == nullptr) {
      throw DataError("cannot read shard " + shard.string() + ": " + std::strerror(errno));
    }
    handle_ = f;
  }
}

ShardReader::~ShardReader() {
  if (handle_ == nullptr) return;
  if (gz_) {
    gzclose(static_cast<gzFile>(handle_));
  } else {
    std::fclose(static_cast<std::FILE*>(handle_));
  }
}

bool ShardReader::fill() {
  if (eof_) return false;
  if (pos_ > 0) {
    std::memmove(buf_.data(), buf_.data() + pos_, len_ - pos_);
    len_ -= pos_;
    pos_ = 0;
  }
  if (len_ == buf_.size()) buf_.resize(buf_.size() * 2);
  const std::size_t want = buf_.size() - len_;
  std::size_t got = 0;
  if (gz_) {
    int r = gzread(static_cast<gzFile>(handle_), buf_.data() + len_, static_cast<unsigned>(want));
    if (r < 0) {
      int code = 0;
      const char* msg = gzerror(static_cast<gzFile>(handle_), &code);
      throw DataError("cannot read shard " + path_.string() + ": " + msg);
    }
    got = static_cast<std::size_t>(r);
  } else {
    auto* f = static_cast<std::FILE*>(handle_);
    got = std::fread(buf_.data() + len_, 1, want, f);
    if (got < want && std::ferror(f)) {
      throw DataError("cannot read shard " + path_.string() + ": " + std::strerror(errno));
    }
  }
  if (got == 0) eof_ = true;
  len_ += got;
  return got > 0;
}

bool ShardReader::next_line(std::string& line) {
  for (;;) {
    const char* start = buf_.data() + pos_;
    const void* nl = std::memchr(start, '\n', len_ - pos_);
    if (nl != nullptr) {
      const auto* end = static_cast<const char*>(nl);
      std::size_t n = static_cast<std::size_t>(end - start);
      if (n > 0 && start[n - 1] == '\r') --n;
      line.assign(start, n);
      pos_ = static_cast<std::size_t>(end - buf_.data()) + 1;
      ++line_no_;
      return true;
    }
    if (!fill()) {
      if (pos_ == len_) return false;
      std::size_t n = len_ - pos_;
      if (buf_[pos_ + n - 1] == '\r') --n;
      line.assign(buf_.data() + pos_, n);
      pos_ = len_;
      ++line_no_;
      return true;
    }
  }
}

ShardStats read_shard(const std::filesystem::path& shard, std::size_t ordinal,
                      const std::function<void(const Document&)>& sink,
                      std::string* content_digest) {
  ShardReader reader(shard);
  ShardStats stats;
  Sha256 digest;
  Document doc;
  const std::string prefix = std::to_string(ordinal) + ":";
  std::string line;
  while (reader.next_line(line)) {
    stats.bytes += line.size() + 1;
    if (content_digest != nullptr) {
      digest.update(line);
      digest.update("\n");
    }
    if (!is_valid_utf8(line)) {
      ++stats.malformed;
      continue;
    }
    doc.id = prefix + std::to_string(reader.line_number());
    doc.text.swap(line);
    sink(doc);
    doc.text.swap(line);
    ++stats.documents;
  }
  if (content_digest != nullptr) *content_digest = digest.hex_digest();
  return stats;
}

DocumentStream::DocumentStream(CorpusManifest manifest) : manifest_(std::move(manifest)) {}
DocumentStream::~DocumentStream() = default;
DocumentStream::DocumentStream(DocumentStream&&) noexcept = default;
DocumentStream& DocumentStream::operator=(DocumentStream&&) noexcept = default;

std::optional<Document> DocumentStream::next() {
  while (shard_ < manifest_.shards.size()) {
    if (!reader_) reader_ = std::make_unique<ShardReader>(manifest_.shards[shard_]);
    while (reader_->next_line(line_)) {
      if (!is_valid_utf8(line_)) {
        ++malformed_;
        continue;
      }
      return Document{std::to_string(shard_) + ":" + std::to_string(reader_->line_number()),
                      std::move(line_)};
    }
    reader_.reset();
    ++shard_;
  }
  return std::nullopt;
}

DocumentStream iter_documents(const std::filesystem::path& manifest) {
  return DocumentStream(CorpusManifest::load(manifest));
}

}  // namespace nctk
