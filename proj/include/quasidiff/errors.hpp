#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace quasidiff {

enum class ErrorCode {
  TolNotAchievable,
  UnboundedDomain,
  InfiniteValue,
  TrivialMeasure,
  NotInjective,
  NotMeasureDense,
  CertificateUnknown,
  NotInS,
  NotInSs,
  DomainViolation,
  MismatchedBase,
  TooFewStates,
  NotReachable,
  QKViolated,
  UnboundedSpace,
  Undecided,
  Unsupported,
  InvalidInput,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::InvalidInput, what);
}

}  // namespace quasidiff
