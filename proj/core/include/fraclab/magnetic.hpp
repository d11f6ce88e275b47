#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fraclab/domain_mask.hpp"
#include "fraclab/field.hpp"
#include "fraclab/grid.hpp"
#include "fraclab/schrodinger.hpp"

namespace fraclab {

// Two-point tensor field on the grid: values[(x*Nf + y)*comps + c] where
// Nf is the number of grid points, x and y are flat point indices, and c
// enumerates the n^order tensor components in row-major multi-index order.
// Supported problem sizes keep Nf^2*comps in the tens of millions at most;
// operations stream over x-rows.
struct BivariateField {
  Grid grid;
  int order = 0;
  std::size_t comps = 1;
  std::vector<double> values;

  static BivariateField make(const Grid& g, int order);

  std::size_t points() const { return grid.size(); }
  double at(std::size_t x, std::size_t y, std::size_t c = 0) const {
    return values[(x * grid.size() + y) * comps + c];
  }
  double& at(std::size_t x, std::size_t y, std::size_t c = 0) {
    return values[(x * grid.size() + y) * comps + c];
  }
};

// Pointwise tensor algebra. Orders add under the product; contraction pairs
// the trailing indices of a against all of b (requires order(a) >= order(b)).
BivariateField tensor_product(const BivariateField& a, const BivariateField& b);
BivariateField contract(const BivariateField& a, const BivariateField& b);

// Symmetric/antisymmetric parts with respect to swapping the two points,
// and the swapped field itself: swap_args(a)(x,y) = a(y,x).
BivariateField swap_args(const BivariateField& a);
BivariateField sym_part(const BivariateField& a);
BivariateField antisym_part(const BivariateField& a);

// Per-point L2 norms across the other argument: j1 integrates over the
// first slot (column norm at x), j2 over the second (row norm at x).
Field j1_norm(const BivariateField& a);
Field j2_norm(const BivariateField& a);

// Componentwise h^{2n}-weighted double sum over all point pairs.
// Antisymmetric inputs integrate to zero.
std::vector<double> antisym_integral(const BivariateField& a);

// Weighted norms over the pair grid.
double l2_norm(const BivariateField& a);
double l1_norm(const BivariateField& a);

BivariateField operator+(const BivariateField& a, const BivariateField& b);
BivariateField operator-(const BivariateField& a, const BivariateField& b);
BivariateField operator*(double c, const BivariateField& a);

// Scaling factor of the two-point difference kernel, calibrated once per
// (n, N, L, s) so that the double-sum energy of a reference Gaussian equals
// its spectral half-power norm, then cached. The formula leaves this
// constant free; the energy identity is what pins it.
double gradient_calibration(const Grid& g, const Exponent& s);

// The antisymmetric kernel vector: direction d/|d| from the minimum-image
// displacement d = y-x, magnitude the square root of a nonnegative pair
// weight fitted (deterministically, once per configuration) so the
// two-point energy reproduces the fractional multiplier |xi|^{2s'} across
// the resolvable band -- the lattice stand-in for coef * d/|d|^{n/2+s'+1}.
// The diagonal and the half-box ties (where the minimum image is ambiguous)
// are zeroed; this realizes the principal-value treatment of the singular
// cell. For s' > 1/2 no nonnegative kernel carries the full band, so the
// top of the band keeps a deficit; the energy identity is the certificate.
BivariateField make_alpha(const Grid& g, const Exponent& s);

// Two-point gradient of order s: (D^m u(x) - D^m u(y)) (x) alpha(x,y) with
// m = floor(s) taken spectrally. Symmetric under argument swap. Supported
// at (n=1, m<=2) and (n=2, m=0).
BivariateField frac_gradient(const Field& u, const Exponent& s);

// <grad^s u, grad^s v> over the pair grid without materializing either
// gradient. Equals the half-power spectral pairing up to quadrature error.
double gradient_energy(const Field& u, const Field& v, const Exponent& s);

// Magnetic potential problem: vector potential A as a bivariate field of
// order floor(s)+1 supported in omega x omega (hard requirement), electric
// potential q. The remaining integrability assumptions are grid-finite by
// construction; `warnings` collects fidelity diagnostics instead of errors.
struct MagneticProblem {
  DomainMask mask;
  Exponent s;
  BivariateField a;
  Field q;
  std::vector<std::string> warnings;

  static MagneticProblem make(const DomainMask& mask, double s,
                              BivariateField a, Field q);

  // q(x) + row integral of |A(x,y)|^2: the effective electric potential the
  // diamagnetic term contributes.
  Field effective_potential() const;
};

// B(u,v) = <grad^s u + A u(x), grad^s v + A v(x)> + <q u, v>. Symmetric.
double magnetic_bilinear(const Field& u, const Field& v,
                         const MagneticProblem& p);

// Solve B(f + w, e_i) = 0 over the interior cells (dense symmetric solve;
// supported interiors are small). f must vanish on the interior and its
// one-cell halo.
Field magnetic_solve(const Field& f, const MagneticProblem& p,
                     SolveReport* report = nullptr);

// Measurement matrix entries[i*dim+j] = B(u_{f_i}, f_j) for the magnetic
// problem; symmetric by the solve identity B(u_1, f_2) = B(u_2, f_1).
DNMatrix magnetic_dn_map(const MagneticProblem& p, const ExteriorBasis& basis);

// The expansion operators of the combined potential S = A . alpha. For
// floor_s = 0 no derivatives appear: nonlocal = -(S(x,y) + S(y,x)) and
// coeff[0] = 2 * row integral of S. For floor_s = 1 (n=1) the product rule
// collapses the expansion to coeff[0] = -(d/dx) row integral of S with a
// vanishing first-order coefficient; nonlocal picks up one centered
// difference along each slot. coeff[k] multiplies the k-th derivative of u.
struct GaugeOperators {
  BivariateField nonlocal;    // order 0
  std::vector<Field> coeff;   // size floor_s + 1
};
GaugeOperators gauge_operators(const BivariateField& S, int floor_s);

// Residuals of the three gauge-class conditions for a pair of problems:
// the nonlocal operator of S1-S2, the zeroth-order coefficient balanced
// against the effective-potential difference, and the higher-derivative
// coefficients. Norms are absolute (L2 over the pair grid or the grid).
struct GaugeReport {
  double nonlocal_residual = 0.0;
  double potential_residual = 0.0;
  double derivative_residual = 0.0;
  bool equivalent = false;
};
GaugeReport gauge_equivalent(const MagneticProblem& p1,
                             const MagneticProblem& p2, double tol);

// Construct a problem in the same gauge class as p (floor(s) = 0 only):
// the antisymmetric part of A is kept, the symmetric part is replaced by
// sym_part(replacement), and q is compensated through the zeroth-order
// condition. Every residual the verdict checks is zero by construction.
MagneticProblem gauge_partner(const MagneticProblem& p,
                              const BivariateField& replacement);

}  // namespace fraclab
