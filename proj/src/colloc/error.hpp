#pragma once

#include <stdexcept>
#include <string>

namespace colloc {

// Numeric values are part of the C ABI (see colloc.h); append only.
enum class ErrorCode : int {
  Ok = 0,
  InvalidArgument = 1,
  Io = 2,
  GenerationExhausted = 3,
  UnknownWord = 4,
  UnknownId = 5,
  SequenceTooLong = 6,
  EmptyMask = 7,
  NonFiniteGradient = 8,
  NonFiniteLoss = 9,
  InsufficientCombinations = 10,
  EmptySuite = 11,
  MalformedRow = 12,
  EmptyCorpus = 13,
  TooFewVerbs = 14,
  BinTooSmall = 15,
  MissingInput = 16,
  SchemaMismatch = 17,
  Internal = 18,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace colloc
