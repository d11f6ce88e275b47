#pragma once

#include <functional>

#include "fraclab/field.hpp"
#include "fraclab/fft.hpp"

namespace fraclab {

// (-Delta)^s u = F^-1(|xi|^{2s} u^hat). Zero mode maps to 0 for s > 0; for
// s < 0 it is undefined and the caller must either pass a mean-zero field or
// opt into projecting the mean out explicitly.
// Requires s > -n/2.
Field frac_laplacian(const Field& u, double s, bool project_zero_mode = false);

// Apply a real radial Fourier multiplier m(|xi|^2) to u. zero_mode_value
// replaces m at the zero frequency.
Field apply_multiplier(const Field& u, const std::function<double(double)>& m_of_xi_sq,
                       double zero_mode_value);

// d^order/dx_axis^order by spectral differentiation ((i xi)^order symbol).
Field spectral_derivative(const Field& u, int axis, int order);

enum class RieszBackend { spectral, direct };

// Riesz potential I_alpha u ~ u * |x|^{-alpha}, 0 < alpha < n.
//  spectral: (-Delta)^{-(n-alpha)/2} scaled by a fitted calibration constant
//            (mean-zero input required, or project flag);
//  direct:   displacement-kernel quadrature, diagonal cell replaced by a
//            5-point-per-axis Gauss-Legendre cell average taken on the
//            positive orthant so no node hits the singularity. The sum needs
//            no zero-mode convention.
Field riesz_potential(const Field& u, double alpha, RieszBackend backend,
                      bool project_zero_mode = false);

// Calibration constant of the spectral backend, fitted by least squares
// against the direct backend on a fixed seeded phantom set; cached per
// (n, N, L, alpha).
double riesz_calibration(const Grid& g, double alpha);

// Discrete Parseval-weighted Sobolev norm. homogeneous: weight |xi|^{2r}
// with the zero mode dropped (r != 0) so constants have zero seminorm;
// inhomogeneous: weight (1+|xi|^2)^r. Homogeneous with r < 0 requires a
// mean-zero field.
double sobolev_norm(const Field& u, double r, bool homogeneous);

// Local integer-power realization: k applications of the (2n+1)-point
// second-difference stencil (periodic wrap).
Field stencil_laplacian(const Field& u, int k = 1);

namespace detail {
// Reference O(N^2n) gather for the direct Riesz backend and the padded-FFT
// fast path that computes the same linear convolution; both exposed so tests
// can pin their agreement.
Field riesz_direct_naive(const Field& u, double alpha);
Field riesz_direct_fft(const Field& u, double alpha);
Field riesz_direct(const Field& u, double alpha);
double riesz_diagonal_cell_average(int n, double h, double alpha);
}  // namespace detail

}  // namespace fraclab
