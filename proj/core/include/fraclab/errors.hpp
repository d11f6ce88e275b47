#pragma once

#include <stdexcept>
#include <string>

namespace fraclab {

// Error taxonomy. Every failure carries a stable code name so drivers can
// report module errors verbatim and map them onto process exit codes.
enum class Errc {
  GridMismatch,
  ExponentOutOfRange,
  NegativeExponentNonMeanZero,
  AlphaOutOfRange,
  BumpOutsideBox,
  ZeroField,
  SupportViolation,
  InvalidExponentOrder,
  EpsTooLarge,
  NearSingular,
  NoConvergence,
  EigSolveFailure,
  OrderMismatch,
  UnsupportedConfig,
  UnsupportedFloor,
  ConfigMismatch,
  ShapeMismatch,
  SupportOutsideBall,
  MarginTooSmall,
  DegeneratePhantoms,
  ApproximationTooCoarse,
  NotFound,
  UnsupportedFormat,
  BadConfig,
  IoFailure,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool ok, Errc code, const std::string& msg) {
  if (!ok) fail(code, msg);
}

}  // namespace fraclab
