#include "dnc/error.hpp"

namespace dnc {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::Infeasible: return "INFEASIBLE";
    case Errc::TooLarge: return "TOO_LARGE";
    case Errc::ResolutionTooCoarse: return "RESOLUTION_TOO_COARSE";
    case Errc::EmptySpace: return "EMPTY_SPACE";
    case Errc::Cycle: return "CYCLE";
    case Errc::DimMismatch: return "DIM_MISMATCH";
    case Errc::MissingTag: return "MISSING_TAG";
    case Errc::ShapeMismatch: return "SHAPE_MISMATCH";
    case Errc::MissingTensor: return "MISSING_TENSOR";
    case Errc::AllFixed: return "ALL_FIXED";
    case Errc::InvalidPlan: return "INVALID_PLAN";
    case Errc::EmptyMask: return "EMPTY_MASK";
    case Errc::Degenerate: return "DEGENERATE";
    case Errc::ParseError: return "PARSE_ERROR";
    case Errc::InvalidArgument: return "INVALID_ARGUMENT";
    case Errc::IoError: return "IO_ERROR";
  }
  return "UNKNOWN";
}

Error::Error(Errc code, const std::string& msg)
    : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

InfeasibleError::InfeasibleError(double min_total_dt, const std::string& msg)
    : Error(Errc::Infeasible, msg), min_total_dt_(min_total_dt) {}

void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace dnc
