#pragma once

#include <stdexcept>
#include <string>

namespace tlnn {

// Formula text could not be tokenized or parsed. Positions are 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, int line, int column)
      : std::runtime_error(msg + " (line " + std::to_string(line) +
                           ", column " + std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// Violated AST invariant: bad interval, negative weight, wrong arity or a
// weight vector of the wrong length.
class FormulaError : public std::runtime_error {
 public:
  explicit FormulaError(const std::string& msg) : std::runtime_error(msg) {}
};

// An evaluation window reaches past the end of the signal.
class HorizonError : public std::runtime_error {
 public:
  explicit HorizonError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed dataset contents (bad label, ragged row, bad transform input).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg, long row = -1)
      : std::runtime_error(row >= 0 ? msg + " (row " + std::to_string(row) + ")"
                                    : msg),
        row_(row) {}

  long row() const { return row_; }

 private:
  long row_;
};

// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration value.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace tlnn
