#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mvabsa {

// Base class for all library errors. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration, dataset, or argument values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input to a pure operation (empty sentence, empty generation, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

// Schema cannot produce any string (empty lexicon or category set).
class UnsatisfiableSchemaError : public Error {
 public:
  using Error::Error;
};

// Byte sequence left the automaton's live-state set.
class DeadTransitionError : public Error {
 public:
  DeadTransitionError(const std::string& msg, std::size_t offset)
      : Error(msg), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// No vocabulary token can legally continue a live decode state.
class EmptyMaskError : public Error {
 public:
  using Error::Error;
};

// A string claimed to be schema-valid failed to parse.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Backend transport or protocol failure, oracle misses, context overflow.
class BackendError : public Error {
 public:
  using Error::Error;
};

// Evaluation cannot proceed (missing gold, empty prediction file).
class EvalError : public Error {
 public:
  using Error::Error;
};

}  // namespace mvabsa
