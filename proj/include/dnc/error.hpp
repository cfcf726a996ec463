#pragma once

#include <stdexcept>
#include <string>

namespace dnc {

enum class Errc {
  Infeasible,
  TooLarge,
  ResolutionTooCoarse,
  EmptySpace,
  Cycle,
  DimMismatch,
  MissingTag,
  ShapeMismatch,
  MissingTensor,
  AllFixed,
  InvalidPlan,
  EmptyMask,
  Degenerate,
  ParseError,
  InvalidArgument,
  IoError,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg);
  Errc code() const { return code_; }

 private:
  Errc code_;
};

// Budget cannot be met by any combination; carries the tightest
// achievable total delta-time so callers can report the gap.
class InfeasibleError : public Error {
 public:
  InfeasibleError(double min_total_dt, const std::string& msg);
  double min_total_dt() const { return min_total_dt_; }

 private:
  double min_total_dt_;
};

[[noreturn]] void fail(Errc code, const std::string& msg);

}  // namespace dnc
