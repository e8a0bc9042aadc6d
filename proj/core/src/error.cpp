#include "ahs/error.hpp"

namespace ahs {

const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::Pole: return "pole";
    case ErrorCode::OutOfRegion: return "out_of_region";
    case ErrorCode::Precondition: return "precondition";
    case ErrorCode::Gate: return "gate";
    case ErrorCode::Numerical: return "numerical";
    case ErrorCode::NoSignal: return "no_signal";
    case ErrorCode::Config: return "config";
  }
  return "unknown";
}

}  // namespace ahs
