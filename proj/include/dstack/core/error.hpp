#pragma once

#include <stdexcept>
#include <string>

namespace dstack {

// Base for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation requested on a state that cannot support it (e.g. legal_actions
// on a terminal).
class InvalidState : public Error {
 public:
  using Error::Error;
};

class IllegalAction : public Error {
 public:
  using Error::Error;
};

// Raised when a full-width computation would exceed its node budget.
class GameTooLarge : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(int line, const std::string& what)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_ = 0;
};

class UnsupportedAgent : public Error {
 public:
  using Error::Error;
};

class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

}  // namespace dstack
