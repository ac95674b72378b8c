#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace jacopt {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class BoundError : public Error {
 public:
  using Error::Error;
};

/// Raised by the expression and file parsers. Line and column are 1-based;
/// zero means "not applicable".
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(format(what, line, column)), line_(line), column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  static std::string format(const std::string& what, int line, int column) {
    std::string out;
    if (line > 0) {
      out = "line " + std::to_string(line);
      if (column > 0) out += ", column " + std::to_string(column);
      out += ": ";
    }
    return out + what;
  }

  int line_;
  int column_;
};

/// A problem function could not be evaluated (log of a nonpositive number,
/// division by zero, ...). `row` is the 0-based function index, or npos when
/// the failing row is unknown.
class EvalFault : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  EvalFault(const std::string& what, std::size_t row = npos)
      : Error(row == npos ? what : "row " + std::to_string(row + 1) + ": " + what), row_(row) {}

  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class ProbeError : public Error {
 public:
  using Error::Error;
};

class CheckError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace jacopt
