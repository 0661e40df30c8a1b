#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace claimcheck {

/// Input data violates a schema or cross-reference invariant.
class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed JSON/JSONL or config text. Carries the 1-based line number.
class ParseError : public ValidationError {
  public:
    ParseError(const std::string& path, std::size_t line, const std::string& what)
        : ValidationError(path + ":" + std::to_string(line) + ": " + what), m_line(line)
    {}

    std::size_t line() const noexcept { return m_line; }

  private:
    std::size_t m_line;
};

/// A file could not be opened, read or written.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace claimcheck
