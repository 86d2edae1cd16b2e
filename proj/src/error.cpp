#include "logseg/error.hpp"

namespace logseg {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::AllWeightsZero: return "AllWeightsZero";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::DegenerateCloud: return "DegenerateCloud";
    case ErrorKind::ZeroScale: return "ZeroScale";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::CollinearPoints: return "CollinearPoints";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::MissingProperty: return "MissingProperty";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace logseg
