#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tarml {

// Base for every failure raised by the library. Callers that only care about
// "something went wrong" catch this; the CLI turns it into a one-line
// diagnostic.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text. Row and column are 1-based positions in the source
// file (row 1 is the header).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : Error(what), row_(row), column_(column) {}

  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

// Data does not match the schema it is used with (width, fingerprint,
// missing column).
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace tarml
