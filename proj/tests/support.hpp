#pragma once

#include <complex>
#include <functional>
#include <optional>

#include "ahs/error.hpp"

namespace testing {

inline std::optional<ahs::ErrorCode> code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ahs::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline double rel(std::complex<double> a, std::complex<double> b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

}  // namespace testing
