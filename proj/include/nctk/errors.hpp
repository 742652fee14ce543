#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nctk {

// Base of every error raised by the toolkit. The CLI maps DataError to exit
// status 1 and UsageError to exit status 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or unreadable input data: corrupt files, schema violations, I/O failure.
class DataError : public Error {
 public:
  using Error::Error;
};

// A caller violated an operation's precondition (wrong gram length, bad flag).
class UsageError : public Error {
 public:
  using Error::Error;
};

// A DataError pinned to a line of a named file.
class ParseError : public DataError {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : DataError(file + ":" + std::to_string(line) + ": " + what),
        file_(file),
        line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

// The external scorer answered with something the wire protocol forbids.
class ProtocolError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace nctk
