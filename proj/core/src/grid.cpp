#include "fraclab/grid.hpp"

namespace fraclab {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::GridMismatch: return "GridMismatch";
    case Errc::ExponentOutOfRange: return "ExponentOutOfRange";
    case Errc::NegativeExponentNonMeanZero: return "NegativeExponentNonMeanZero";
    case Errc::AlphaOutOfRange: return "AlphaOutOfRange";
    case Errc::BumpOutsideBox: return "BumpOutsideBox";
    case Errc::ZeroField: return "ZeroField";
    case Errc::SupportViolation: return "SupportViolation";
    case Errc::InvalidExponentOrder: return "InvalidExponentOrder";
    case Errc::EpsTooLarge: return "EpsTooLarge";
    case Errc::NearSingular: return "NearSingular";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::EigSolveFailure: return "EigSolveFailure";
    case Errc::OrderMismatch: return "OrderMismatch";
    case Errc::UnsupportedConfig: return "UnsupportedConfig";
    case Errc::UnsupportedFloor: return "UnsupportedFloor";
    case Errc::ConfigMismatch: return "ConfigMismatch";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::SupportOutsideBall: return "SupportOutsideBall";
    case Errc::MarginTooSmall: return "MarginTooSmall";
    case Errc::DegeneratePhantoms: return "DegeneratePhantoms";
    case Errc::ApproximationTooCoarse: return "ApproximationTooCoarse";
    case Errc::NotFound: return "NotFound";
    case Errc::UnsupportedFormat: return "UnsupportedFormat";
    case Errc::BadConfig: return "BadConfig";
    case Errc::IoFailure: return "IoFailure";
  }
  return "UnknownError";
}

Grid Grid::make(int n, int N, double L, std::size_t point_cap) {
  require(n >= 1 && n <= 3, Errc::BadConfig, "dimension must be 1, 2 or 3");
  require(N >= 8, Errc::BadConfig, "need at least 8 points per axis");
  require((N & (N - 1)) == 0, Errc::BadConfig, "points per axis must be a power of two");
  require(L > 0.0, Errc::BadConfig, "box half-length must be positive");
  Grid g;
  g.n = n;
  g.N = N;
  g.L = L;
  g.h = 2.0 * L / N;
  require(g.size() <= point_cap, Errc::BadConfig, "grid exceeds the configured point cap");
  return g;
}

}  // namespace fraclab
