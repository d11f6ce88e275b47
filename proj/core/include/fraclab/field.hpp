#pragma once

#include <vector>

#include "fraclab/grid.hpp"
#include "fraclab/rng.hpp"

namespace fraclab {

// Real-valued samples of a function on a Grid.
struct Field {
  Grid grid;
  std::vector<double> values;

  Field() = default;
  explicit Field(const Grid& g) : grid(g), values(g.size(), 0.0) {}
  Field(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
    require(values.size() == g.size(), Errc::GridMismatch, "value count does not match grid");
  }

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }
};

void check_same_grid(const Field& u, const Field& v);

// h^n-weighted discrete L2 pairing and norm.
double l2_inner(const Field& u, const Field& v);
double l2_norm(const Field& u);
double mean(const Field& u);

Field operator+(const Field& u, const Field& v);
Field operator-(const Field& u, const Field& v);
Field operator*(double a, const Field& u);
Field pointwise(const Field& u, const Field& v);  // u_i * v_i

void axpy(double a, const Field& x, Field& y);  // y += a x

// Smooth compactly supported bump: amplitude * exp(1 - 1/(1 - |x-c|^2/r^2))
// inside the ball, exactly zero outside; peak value is the amplitude.
// The ball must fit in the box with margin >= 2h.
Field make_bump(const Grid& g, const Point& center, double radius, double amplitude);

// Smooth plateau cutoff: 1 for |x-c| <= r_inner, 0 for |x-c| >= r_outer,
// C^inf glue in between.
Field make_cutoff(const Grid& g, const Point& center, double r_inner, double r_outer);

// Real plane-wave mode cos/sin(k . pi x / L); integer mode vector.
Field make_cos_mode(const Grid& g, const std::array<int, 3>& k);
Field make_sin_mode(const Grid& g, const std::array<int, 3>& k);

// Centered Gaussian exp(-|x-c|^2 / (2 sigma^2)); not compactly supported,
// used only where tails below double precision are acceptable.
Field make_gaussian(const Grid& g, const Point& center, double sigma);

// Seeded superposition of up to max_bumps bumps with centers/radii inside
// the ball K(center, K_radius); normalized to unit L2 norm.
Field random_bump_superposition(const Grid& g, const Point& K_center, double K_radius,
                                int max_bumps, std::uint64_t seed);

// Subtract a scaled bump so the mean vanishes while compact support is
// preserved (unlike subtracting a constant, which smears over the box).
Field remove_mean_with_bump(const Field& u, const Point& center, double radius);

// Seeded band-limited field: random coefficients on modes with |k| <= kmax.
Field random_band_limited(const Grid& g, int kmax, std::uint64_t seed);

}  // namespace fraclab
