#pragma once

#include <stdexcept>
#include <string>

namespace symrec {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input text is not well-formed (bad JSON, bad YAML, truncated binary).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input with the wrong shape (empty recording, empty stroke).
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// A value of the wrong type or outside its domain (non-numeric coordinate).
class ValueError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument to an algorithm.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment or queue configuration; raised before any work is done.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Operation called on an object that is not ready for it (empty template store).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure during training.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Model file cannot be loaded.
class LoadError : public Error {
 public:
  using Error::Error;
};

}  // namespace symrec
