#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fraclab/domain_mask.hpp"
#include "fraclab/field.hpp"
#include "fraclab/grid.hpp"

namespace fraclab {

enum class ConstantKind { freq_split, simple, interp };

const char* constant_kind_name(ConstantKind k);

// Smallest eigenvalue of the five/seven-point Dirichlet Laplacian restricted
// to the grid points strictly inside K (zero off the mask), by inverse power
// iteration with conjugate-gradient solves.
double dirichlet_lambda1(const Grid& g, const RegionSpec& K);

// Classical Poincare constant of K: 1/sqrt(lambda_1).
double classical_constant(const Grid& g, const RegionSpec& K);

// Bounding constants for ||(-Lap)^{t/2} u|| <= c * ||(-Lap)^{s/2} u|| over
// fields supported in K, s >= t >= 0:
//   freq_split: eps^{t-s} / sqrt(1 - eps^n |K| |B(0,1)|); requires
//               eps < (|K||B(0,1)|)^{-1/n}. With eps omitted, the minimum
//               over a 1000-point sweep of admissible eps.
//   simple:     sqrt(2) (2 |K| |B(0,1)|)^{(s-t)/n}  (freq_split at the
//               half-mass eps).
//   interp:     classical_constant(K)^{s-t}; valid for s >= t >= 1 or
//               s >= 1 >= t >= 0.
double theoretical_constant(ConstantKind kind, const Grid& g,
                            const RegionSpec& K, double s, double t,
                            std::optional<double> eps = std::nullopt);

// ||(-Lap)^{t/2} u||_{L2} / ||(-Lap)^{s/2} u||_{L2} for u supported in K.
double poincare_ratio(const Field& u, const RegionSpec& K, double s, double t);

struct SamplerConfig {
  std::size_t num_samples = 100;
  int max_bumps = 5;
  std::uint64_t seed = 42;
};

struct ViolationReport {
  double s = 0.0;
  double t = 0.0;
  ConstantKind kind = ConstantKind::simple;
  double constant = 0.0;
  double max_ratio = 0.0;
  std::size_t samples = 0;
  std::size_t violations = 0;

  struct Row {
    std::size_t sample_id;
    double ratio;
    bool violated;
  };
  std::vector<Row> rows;

  void write_csv(const std::string& path) const;
  void write_json(const std::string& path) const;
};

// Draw seeded bump superpositions supported in K and compare each ratio
// against the requested theoretical constant (plus 1e-9 slack).
ViolationReport verify_sweep(const Grid& g, const RegionSpec& K,
                             const SamplerConfig& cfg, double s, double t,
                             ConstantKind kind,
                             std::optional<double> eps = std::nullopt);

}  // namespace fraclab
