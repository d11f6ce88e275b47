#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "fraclab/field.hpp"
#include "fraclab/grid.hpp"

namespace fraclab {

// Axis-aligned geometric region used to carve index sets out of a grid.
// Membership is strict (open region), so a ball of radius 1 on a grid that
// samples x = 1 exactly does not include that boundary point; this is what
// makes the discrete Dirichlet eigenvalues of the masked Laplacian match the
// closed-form interval formula.
struct RegionSpec {
  enum class Shape { ball, box };

  Shape shape = Shape::ball;
  std::array<double, 3> center{0.0, 0.0, 0.0};  // ball
  double radius = 0.0;                          // ball
  std::array<double, 3> lo{0.0, 0.0, 0.0};      // box
  std::array<double, 3> hi{0.0, 0.0, 0.0};      // box

  static RegionSpec ball(std::array<double, 3> center, double radius);
  static RegionSpec box(std::array<double, 3> lo, std::array<double, 3> hi);

  bool contains(const std::array<double, 3>& x, int n) const;
  double volume(int n) const;
  // Radius of the largest ball inscribed in the region, with its center.
  double inscribed_radius(int n) const;
  std::array<double, 3> inscribed_center(int n) const;
};

// Volume of the unit ball in R^n (n in 1..3).
double unit_ball_volume(int n);

// Sorted flat indices of the grid points strictly inside the region.
std::vector<std::size_t> region_indices(const Grid& g, const RegionSpec& r);

// True when u vanishes (relative to its own L2 size) off the given index set.
// Tolerance 1e-14 * ||u|| absorbs underflowing bump tails.
bool is_supported_on(const Field& u, const std::vector<std::size_t>& inside);
bool is_supported_in(const Field& u, const RegionSpec& r);

// Zero out everything off the index set.
Field masked(const Field& u, const std::vector<std::size_t>& inside);

// Sorted flat indices within Chebyshev distance rad of the given set
// (includes the set itself; wraps across the torus seam).
std::vector<std::size_t> halo_indices(const Grid& g,
                                      const std::vector<std::size_t>& inside,
                                      int rad);

// Index sets for a scattering-style layout: interior domain, two exterior
// measurement windows, and an optional region of interest. Construction
// enforces pairwise disjointness, at least two grid cells of separation
// between any two sets (Chebyshev metric on index space), and a half-box
// padding margin so compactly supported data stays away from the torus seam.
struct DomainMask {
  Grid grid;
  std::vector<std::size_t> omega;
  std::vector<std::size_t> w1;
  std::vector<std::size_t> w2;
  std::vector<std::size_t> v;  // empty when no ROI was requested

  static DomainMask make(const Grid& g, const RegionSpec& omega_r,
                         const RegionSpec& w1_r, const RegionSpec& w2_r,
                         const std::optional<RegionSpec>& v_r = std::nullopt);
};

}  // namespace fraclab
