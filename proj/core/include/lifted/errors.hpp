#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace lifted {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A documented precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

// softmax over an axis whose entries are all -inf.
class DegenerateDistributionError : public Error {
 public:
  using Error::Error;
};

// A metric was requested on labels for which it is not defined.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

// Malformed input data (dataset rows, config files, cassettes).
class DataError : public Error {
 public:
  using Error::Error;
};

// Checkpoint could not be read or does not match the requested model.
class LoadError : public Error {
 public:
  using Error::Error;
};

// Failure reported by an LLM client before trial context is attached.
class LlmError : public Error {
 public:
  LlmError(std::string what, bool retriable)
      : Error(std::move(what)), retriable_(retriable) {}
  bool retriable() const noexcept { return retriable_; }

 private:
  bool retriable_;
};

// LLM failure while describing a specific trial.
class TransportError : public Error {
 public:
  TransportError(std::string trial_id, const std::string& what, bool retriable)
      : Error("trial " + trial_id + ": " + what),
        trial_id_(std::move(trial_id)),
        retriable_(retriable) {}
  const std::string& trial_id() const noexcept { return trial_id_; }
  bool retriable() const noexcept { return retriable_; }

 private:
  std::string trial_id_;
  bool retriable_;
};

// Training hit a non-finite loss.
class NumericAbort : public Error {
 public:
  NumericAbort(std::string what, std::string dump_path)
      : Error(std::move(what)), dump_path_(std::move(dump_path)) {}
  const std::string& dump_path() const noexcept { return dump_path_; }

 private:
  std::string dump_path_;
};

}  // namespace lifted
