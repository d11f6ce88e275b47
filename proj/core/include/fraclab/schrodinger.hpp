#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "fraclab/domain_mask.hpp"
#include "fraclab/field.hpp"
#include "fraclab/grid.hpp"

namespace fraclab {

// Exterior-value problem for (-Lap)^s + q on the interior index set: the
// data f lives off the closure of omega, the unknown correction lives on
// omega, and measurements pair solutions with window-supported test data.
struct SchrodingerProblem {
  DomainMask mask;
  double s = 0.5;
  Field q;

  // Validates: s positive and non-integer, q on the same grid and vanishing
  // off omega.
  static SchrodingerProblem make(const DomainMask& mask, double s, Field q);
};

struct SolveReport {
  bool used_cg = true;
  std::size_t iterations = 0;
  // variational residual over omega relative to ||f|| (or to the source
  // norm when f vanishes)
  double residual = 0.0;
};

// B_q(v, w) = <(-Lap)^{s/2} v, (-Lap)^{s/2} w> + <q v, w>. Symmetric.
double bilinear_form(const Field& v, const Field& w,
                     const SchrodingerProblem& p);

// Solve B_q(f + v, e_i) = <source, e_i> for all interior points i, with v
// supported on omega. Returns u = f + v. The optional interior source makes
// manufactured-solution setups expressible; pass nullptr for the pure
// exterior-value problem. Conjugate gradient when seeded Rayleigh probes
// indicate a positive form, dense eigendecomposition otherwise (capped at
// 2^14 interior points; raises NearSingular when an eigenvalue sits within
// 1e-8 of zero).
Field solve_dirichlet(const Field& f, const SchrodingerProblem& p,
                      SolveReport* report = nullptr,
                      const Field* interior_source = nullptr);

// k smallest eigenvalues (ascending) of v -> restrict((-Lap)^s v) + q v on
// the interior points. Dense; capped at 2^14 interior points.
std::vector<double> dirichlet_spectrum(const SchrodingerProblem& p,
                                       std::size_t k);

// Smooth bumps centered on a low-discrepancy lattice inside W. For a fixed
// W and radius fraction the sequence of centers is deterministic, so bases
// of different sizes are nested by construction (prefixes of one list).
struct ExteriorBasis {
  std::vector<Field> fields;
  std::vector<std::array<double, 3>> centers;
  double radius = 0.0;
};

ExteriorBasis make_exterior_basis(const Grid& g, const RegionSpec& W,
                                  std::size_t count, double radius_frac = 0.3);

// Measurement matrix entries[i*dim+j] = B_q(u_{f_i}, f_j), symmetric.
struct DNMatrix {
  std::size_t dim = 0;
  std::vector<double> entries;
  std::vector<std::array<double, 3>> centers;
  double radius = 0.0;
  double s = 0.0;

  double at(std::size_t i, std::size_t j) const { return entries[i * dim + j]; }
  // ||M - M^T|| / ||M|| in the Frobenius norm
  double symmetry_error() const;
};

DNMatrix dn_map(const SchrodingerProblem& p, const ExteriorBasis& basis);

// lhs = <(Lambda_{q1} - Lambda_{q2}) f1, f2> assembled from the two solves,
// rhs = <(q1 - q2) u1, u2>; the two sides use independent code paths.
struct AlessandriniResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
};

AlessandriniResult alessandrini_gap(const SchrodingerProblem& p1,
                                    const SchrodingerProblem& p2,
                                    const Field& f1, const Field& f2);

// Tikhonov-regularized least squares for exterior data whose solution
// restriction approximates the target on omega. With delta unset, the corner
// of an L-curve over delta = 1e-2 .. 1e-8 is used.
struct RungeResult {
  std::vector<double> coeffs;
  Field f;  // recovered exterior data, a basis combination
  Field u;  // corresponding full solution
  double residual = 0.0;  // ||u|_omega - g||_{L2(omega)}
  // residuals over nested prefix bases at the chosen delta; non-increasing
  // up to the regularization floor sqrt(delta)*||g|| (the penalty may trade
  // that much misfit for smaller coefficients)
  std::vector<double> residual_history;
  double delta_used = 0.0;
  // the candidate grid and full-basis residual at each candidate; filled
  // only when delta was unset (the corner search evaluates them anyway)
  std::vector<double> sweep_deltas;
  std::vector<double> sweep_residuals;
  double condition_estimate = 0.0;
  bool ill_conditioned = false;  // condition estimate above 1e12 (reported)
};

RungeResult runge_approximate(const Field& target, const RegionSpec& W,
                              const SchrodingerProblem& p,
                              std::optional<double> delta,
                              std::size_t basis_size);

// Estimate <q1 - q2, phi> from boundary data alone: Runge-approximate phi
// from W1 under p1 and psi from W2 under p2 (psi must be 1 on the support
// of phi), then evaluate the measurement-difference pairing. Raises
// ApproximationTooCoarse when either Runge residual exceeds 20% of its
// target norm.
double recover_pairings(const SchrodingerProblem& p1,
                        const SchrodingerProblem& p2, const RegionSpec& W1,
                        const RegionSpec& W2, const Field& phi,
                        const Field& psi, std::size_t basis_size,
                        std::optional<double> delta = std::nullopt);

}  // namespace fraclab
