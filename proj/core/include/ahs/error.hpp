#pragma once

#include <stdexcept>
#include <string>

namespace ahs {

enum class ErrorCode {
  Pole,           // Gamma or M(zeta) pole
  OutOfRegion,    // outside the absolute-convergence region
  Precondition,   // hypothesis violated (2 zeta integer, bad input)
  Gate,           // solvability gate refused
  Numerical,      // quadrature / ODE / fit failure
  NoSignal,       // inverse: data indistinguishable from zero
  Config          // cli: malformed configuration
};

const char* to_string(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode c, const std::string& msg) { throw Error(c, msg); }

}  // namespace ahs
