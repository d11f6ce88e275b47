#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fraclab/domain_mask.hpp"
#include "fraclab/field.hpp"
#include "fraclab/grid.hpp"

namespace fraclab {

// Family of affine d-planes probing the ball |x| < L/2, where compactly
// supported grid data lives (see Grid). Directions are antipodally reduced,
// one representative per class: angles pi (m + 1/2) / M on the half-circle
// for n = 2, a Fibonacci hemisphere for n = 3. Offsets along the n - d
// transverse axes are uniform with spacing h and cover the ball, so every
// plane that meets the ball is sampled. d = n-1 gives hyperplanes
// {x : x . dir = p}; d = 1 in n = 3 gives lines x = p0 e0 + p1 e1 + t dir
// with (e0, e1) spanning the plane orthogonal to dir.
struct PlaneGeometry {
  Grid grid;
  int d = 1;
  // One sampled direction per antipodal class: the hyperplane normal for
  // d = n-1, the line direction for d = 1, n = 3.
  std::vector<Point> dir;
  // Orthonormal frame per direction: entries [0, codim) are the transverse
  // (offset) axes, entries [codim, n) span the plane.
  std::vector<std::array<Point, 3>> frame;
  int P = 0;        // offsets per transverse axis
  double p0 = 0.0;  // first offset; offset(i) = p0 + i h

  static PlaneGeometry make(const Grid& g, int d, int directions);

  int codim() const { return grid.n - d; }
  double ball_radius() const { return grid.L / 2.0; }
  double offset(int i) const { return p0 + grid.h * i; }
  std::size_t direction_count() const { return dir.size(); }
  std::size_t offsets_per_direction() const;
  std::size_t plane_count() const;
  bool same_shape(const PlaneGeometry& o) const;
};

// Plane integrals of a field: values in direction-major order, offsets
// row-major within a direction (codim 2 pairs run second index fastest).
struct Sinogram {
  PlaneGeometry geom;
  std::vector<double> values;

  Sinogram() = default;
  explicit Sinogram(PlaneGeometry geometry);

  std::size_t index(std::size_t direction, int i0, int i1 = 0) const;
  // Pairing weight per plane: h per offset axis, 1/M per direction class.
  double measure_weight() const;
};

// Weighted pairing mu * sum over planes; shapes must agree.
double sinogram_inner(const Sinogram& a, const Sinogram& b);
double sinogram_norm(const Sinogram& a);

// Integral of f over every plane of the family: midpoint quadrature with
// step h/2 along the d in-plane axes over the ball's extent, multilinear
// interpolation of f at the sample points. f must be supported in the grid
// ball; each plane then sees its whole slice of the support inside the
// sampled window.
Sinogram forward_dplane(const Field& f, const PlaneGeometry& geom);

// Backprojection: the exact discrete transpose of forward_dplane between
// the mu-weighted sinogram pairing and the h^n grid pairing -- the same
// interpolation weights, scattered instead of gathered.
Field adjoint_dplane(const Sinogram& sino);

// Three independent realizations of the normal operator, which for data in
// the ball acts as a constant times convolution with |x|^{d-n}:
//   composition: adjoint_dplane(forward_dplane(f)), no scaling;
//   convolution: c_fit * displacement-kernel quadrature of f with |x|^{d-n};
//   multiplier:  c_fit * inverse-d-power spectral multiplier (mean projected
//                out; inherits the fitted spectral/direct cross-calibration
//                so the same c_fit serves both scaled routes).
// c_fit is the currently cached fit for this family shape (see below); a
// cache miss fits the default phantom set first.
enum class NormalBackend { composition, convolution, multiplier };

Field normal_operator(const Field& f, const PlaneGeometry& geom, NormalBackend backend);

struct NormalFit {
  double c_fit;   // least-squares scale of composition against convolution
  double spread;  // max relative deviation of per-phantom scales from c_fit
};

// Fits the normal-operator constant on >= 5 distinct nonzero phantoms by
// least squares over the grid ball (where the plane family is complete and
// the convolution identity holds) and caches it for this family shape.
NormalFit fit_normal_constant(const PlaneGeometry& geom, const std::vector<Field>& phantoms);

// Local even-d inversion: f on V recovered from the normal image alone by
// one pass of the (2n+1)-point second-difference stencil, scaled by a
// constant fitted once per grid on a fixed internal calibration phantom
// (held out from the test sets) and cached. Only values of ndf within one
// cell of V enter, so the reconstruction is local to a neighborhood of V.
// Supported for d = 2 in n = 3; V must keep >= 3 cells from the box edge.
// Feed this the smooth convolution or multiplier realization of the normal
// image: the second difference amplifies quadrature roughness by 1/h^2, and
// the raw backprojection composition carries grid-locked ripple at exactly
// that scale (values agree with the smooth image to well under a percent,
// second differences do not).
Field roi_invert_even_d(const Field& ndf, const RegionSpec& v, int d);

struct PartialData {
  double plane_sup;  // max |forward_dplane(f)| over planes meeting V
  double v_norm;     // L2 norm of f restricted to V
};

// The two quantities whose joint smallness at unit ||f|| probes unique
// continuation from plane data through V.
PartialData partial_data_residual(const Field& f, const RegionSpec& v, const PlaneGeometry& geom);

// 1 where the plane meets the region (touching counts), in sinogram value
// order. Balls are tested exactly by transverse distance; boxes use the
// per-axis interval bound, slightly over-inclusive for codim-2 lines.
std::vector<std::uint8_t> planes_meeting(const PlaneGeometry& geom, const RegionSpec& v);

// Named smooth phantoms supported well inside the grid ball, seed-perturbed:
// gauss, blobs, ring, tilt, twin.
Field dplane_phantom(const Grid& g, const std::string& name, std::uint64_t seed);

// The five named phantoms at fixed seeds: the default fitting set.
std::vector<Field> default_phantom_set(const Grid& g);

}  // namespace fraclab
