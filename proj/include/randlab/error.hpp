#pragma once

#include <stdexcept>
#include <string>

namespace randlab {

enum class ErrorCode {
  invalid_argument,  // bad parameter or handle state
  parse,             // malformed text input (CSV, config, numerals)
  cap_exceeded,      // assignment support larger than the enumeration cap
  incompatible,      // design does not fit the population / observed data
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

}  // namespace randlab
