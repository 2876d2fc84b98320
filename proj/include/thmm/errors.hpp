#ifndef THMM_ERRORS_HPP
#define THMM_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace thmm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input line; carries the 1-based line number in the stream.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A sentence whose head structure is not a single rooted tree.
class StructuralError : public Error {
 public:
  StructuralError(std::size_t sentence_id, const std::string& what)
      : Error("sentence " + std::to_string(sentence_id) + ": " + what),
        sentence_id_(sentence_id) {}
  std::size_t sentence_id() const noexcept { return sentence_id_; }

 private:
  std::size_t sentence_id_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace thmm

#endif  // THMM_ERRORS_HPP
