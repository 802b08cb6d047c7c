#pragma once

#include <stdexcept>
#include <string>

namespace typecrowd {

enum class ErrorKind {
  kInvalidParams,
  kInvalidAssignment,
  kInsufficientCluster,
  kIndexOutOfRange,
  kNoVotes,
  kShape,
  kInvalidWeights,
  kRange,
  kInvalidPair,
  kInvalidDimension,
  kNumericalFailure,
  kEstimationFailure,
  kIo,
  kParse,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace typecrowd
