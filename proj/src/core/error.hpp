#pragma once

#include <stdexcept>
#include <string>

namespace lakeorg {

enum class ErrorCode {
  invalid_argument,
  parse,
  io,
  dimension_mismatch,
  undefined_similarity,
  validation,
  not_found,
  inapplicable,
};

/// Base exception for every failure raised by the core library. The C API
/// maps `code()` onto its status enumeration.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace lakeorg
