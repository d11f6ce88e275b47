#pragma once

#include <cstddef>
#include <vector>

#include "fraclab/domain_mask.hpp"
#include "fraclab/field.hpp"
#include "fraclab/grid.hpp"

namespace fraclab {

// Deterministic probe subspace for the continuation experiments. The first
// dim - witnesses members are the lowest-frequency real Fourier modes
// (constant first, then cosine/sine pairs ordered by |k|^2 and lexicographic
// wavevector), each normalized to unit L2 norm. The final `witnesses` members
// are compact bumps placed greedily at the points farthest from V, from the
// box seam, and from each other; every bump clears V by at least four cells,
// so a few passes of the local second-difference stencil still vanish
// identically on V. Placement is analytic in the region geometry and fully
// deterministic.
std::vector<Field> probe_subspace(const Grid& g, const RegionSpec& v, int dim, int witnesses);

struct UcpSpectrumResult {
  double s = 0.0;           // operator power the form was built with
  double lambda_min = 0.0;  // smallest eigenvalue of the restricted form
  Field witness;            // minimizer, normalized to unit L2 norm
  int N = 0;                // grid size the form was assembled on
};

// Minimize Q_s(u) = ||u||^2_{L2(V)} + ||(-Lap)^s u||^2_{L2(V)} over the probe
// subspace at ||u||_{L2} = 1, by a dense generalized symmetric eigensolve of
// the restricted form against the subspace Gram matrix. Integer s >= 1 runs
// the repeated local second-difference stencil (locality is the property
// under test); every other s runs the spectral multiplier, with the mean
// projected out when s < 0 (the Riesz-potential variant of the experiment).
// A member whose form row vanishes identically is an exact null direction of
// the positive semidefinite form and short-circuits the solve with
// lambda_min = 0 and itself as the witness. Q_s is assembled as a Gram
// matrix, so eigenvalues below the solver's roundoff band raise
// EigSolveFailure instead of being reported.
UcpSpectrumResult ucp_quadratic_min(double s, const Grid& g, const RegionSpec& v,
                                    int subspace_dim, int witnesses = 0);

// lambda_min(s_frac) / max(lambda_min(s_int), 1e-16) over one and the same
// probe subspace, so the ratio isolates operator locality. Integer-valued
// exponents run the stencil realization exactly as in ucp_quadratic_min;
// passing the same fractional value twice therefore returns exactly 1.
double locality_contrast(double s_frac, double s_int, const Grid& g, const RegionSpec& v,
                         int subspace_dim, int witnesses = 0);

// One trend row per grid size at a fixed exponent and region: the theory
// offers no quantitative stability, so the values are reported as data and
// only monotone non-increase is asserted by the tests. grid_sizes and
// subspace_dims must have equal lengths; growing the subspace with N is what
// exposes the instability trend.
struct UcpTrendRow {
  double s = 0.0;
  int N = 0;
  int subspace_dim = 0;
  std::size_t v_points = 0;
  double lambda_min = 0.0;
};
std::vector<UcpTrendRow> ucp_refinement_trend(double s, int n, const std::vector<int>& grid_sizes,
                                              const std::vector<int>& subspace_dims, double L,
                                              const RegionSpec& v, int witnesses = 0);

}  // namespace fraclab
