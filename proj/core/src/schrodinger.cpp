#include "fraclab/schrodinger.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "fraclab/errors.hpp"
#include "fraclab/rng.hpp"
#include "fraclab/spectral.hpp"

namespace fraclab {

namespace {

constexpr std::size_t kDenseCap = std::size_t(1) << 14;
constexpr double kEigenvalueFloor = 1e-8;
constexpr std::uint64_t kProbeSeed = 0xA11E5ED;

// y_i = ((-Lap)^s extend(x))(omega_i) + q_i x_i : the interior operator in
// point-value space (the h^n quadrature weight cancels from both sides of
// the Galerkin system).
std::vector<double> apply_interior(const SchrodingerProblem& p,
                                   const std::vector<double>& x) {
  const auto& omega = p.mask.omega;
  Field w(p.mask.grid);
  for (std::size_t i = 0; i < omega.size(); ++i) w[omega[i]] = x[i];
  Field lw = frac_laplacian(w, p.s);
  std::vector<double> y(omega.size());
  for (std::size_t i = 0; i < omega.size(); ++i)
    y[i] = lw[omega[i]] + p.q[omega[i]] * x[i];
  return y;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Ten fixed-seed Rayleigh quotients; a negative one means the form is not
// safely positive and the dense route must take over.
bool probes_positive(const SchrodingerProblem& p) {
  std::size_t m = p.mask.omega.size();
  for (std::uint64_t k = 0; k < 10; ++k) {
    Rng rng(Rng::derive(kProbeSeed, k));
    std::vector<double> x(m);
    for (double& v : x) v = rng.normal();
    double xx = dot(x, x);
    if (xx == 0.0) continue;
    if (dot(apply_interior(p, x), x) / xx <= 0.0) return false;
  }
  return true;
}

std::vector<double> cg_solve(const SchrodingerProblem& p,
                             const std::vector<double>& rhs,
                             std::size_t* iters_out) {
  std::size_t m = rhs.size();
  std::vector<double> x(m, 0.0), r = rhs, d = rhs;
  double rr = dot(r, r);
  const double rr0 = rr;
  const double tol2 = 1e-26 * rr0;
  std::size_t it = 0, maxit = 30 * m + 300;
  while (rr > tol2 && it < maxit) {
    std::vector<double> ad = apply_interior(p, d);
    double dad = dot(d, ad);
    require(dad > 0.0, Errc::NoConvergence,
            "conjugate gradient met a non-positive curvature direction");
    double alpha = rr / dad;
    for (std::size_t i = 0; i < m; ++i) {
      x[i] += alpha * d[i];
      r[i] -= alpha * ad[i];
    }
    double rr_new = dot(r, r);
    double beta = rr_new / rr;
    for (std::size_t i = 0; i < m; ++i) d[i] = r[i] + beta * d[i];
    rr = rr_new;
    ++it;
  }
  require(rr <= tol2 * 1e4, Errc::NoConvergence,
          "conjugate gradient stalled before reaching tolerance");
  if (iters_out) *iters_out = it;
  return x;
}

// Interior matrix A_ij = ((-Lap)^s e_j)(omega_i) + q_i delta_ij, assembled
// column by column and symmetrized to absorb transform roundoff (the exact
// matrix is symmetric: the multiplier is real and even).
Eigen::MatrixXd dense_matrix(const SchrodingerProblem& p) {
  const auto& omega = p.mask.omega;
  std::size_t m = omega.size();
  require(m <= kDenseCap, Errc::UnsupportedConfig,
          "interior has too many points for the dense route");
  const Eigen::Index mi = Eigen::Index(m);
  Eigen::MatrixXd A(mi, mi);
  std::vector<double> e(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    e[j] = 1.0;
    std::vector<double> col = apply_interior(p, e);
    e[j] = 0.0;
    for (std::size_t i = 0; i < m; ++i) A(Eigen::Index(i), Eigen::Index(j)) = col[i];
  }
  return 0.5 * (A + A.transpose());
}

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> dense_eig(
    const SchrodingerProblem& p) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_matrix(p));
  require(es.info() == Eigen::Success, Errc::EigSolveFailure,
          "interior eigendecomposition failed");
  return es;
}

std::vector<double> dense_solve(const SchrodingerProblem& p,
                                const std::vector<double>& rhs) {
  auto es = dense_eig(p);
  const auto& lam = es.eigenvalues();
  double min_abs = lam.cwiseAbs().minCoeff();
  require(min_abs >= kEigenvalueFloor, Errc::NearSingular,
          "interior operator has an eigenvalue within 1e-8 of zero");
  Eigen::Map<const Eigen::VectorXd> b(rhs.data(), Eigen::Index(rhs.size()));
  Eigen::VectorXd y = es.eigenvectors().transpose() * b;
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) /= lam(i);
  Eigen::VectorXd x = es.eigenvectors() * y;
  return std::vector<double>(x.data(), x.data() + x.size());
}

void check_exterior_support(const Field& f, const DomainMask& m) {
  double peak = 0.0;
  for (double v : f.values) peak = std::max(peak, std::abs(v));
  double tol = 1e-14 * peak;
  for (std::size_t idx : halo_indices(f.grid, m.omega, 1))
    require(std::abs(f[idx]) <= tol, Errc::SupportViolation,
            "exterior data must vanish on the interior and its one-cell halo");
}

}  // namespace

SchrodingerProblem SchrodingerProblem::make(const DomainMask& mask, double s,
                                            Field q) {
  require(s > 0.0, Errc::ExponentOutOfRange, "exponent must be positive");
  require(Exponent(s).fractional, Errc::ExponentOutOfRange,
          "integer exponents have a local operator; this solver wants a fractional one");
  require(q.grid == mask.grid, Errc::GridMismatch,
          "potential lives on a different grid");
  require(is_supported_on(q, mask.omega), Errc::SupportViolation,
          "potential must vanish off the interior");
  return SchrodingerProblem{mask, s, std::move(q)};
}

double bilinear_form(const Field& v, const Field& w,
                     const SchrodingerProblem& p) {
  check_same_grid(v, w);
  require(v.grid == p.mask.grid, Errc::GridMismatch,
          "arguments live on a different grid than the problem");
  Field hv = frac_laplacian(v, 0.5 * p.s);
  Field hw = frac_laplacian(w, 0.5 * p.s);
  return l2_inner(hv, hw) + l2_inner(pointwise(p.q, v), w);
}

Field solve_dirichlet(const Field& f, const SchrodingerProblem& p,
                      SolveReport* report, const Field* interior_source) {
  const Grid& g = p.mask.grid;
  require(f.grid == g, Errc::GridMismatch, "data lives on a different grid");
  check_exterior_support(f, p.mask);
  if (interior_source) {
    require(interior_source->grid == g, Errc::GridMismatch,
            "source lives on a different grid");
    require(is_supported_on(*interior_source, p.mask.omega),
            Errc::SupportViolation, "source must vanish off the interior");
  }

  const auto& omega = p.mask.omega;
  std::size_t m = omega.size();
  Field lf = frac_laplacian(f, p.s);
  std::vector<double> rhs(m);
  for (std::size_t i = 0; i < m; ++i) {
    rhs[i] = -lf[omega[i]];
    if (interior_source) rhs[i] += (*interior_source)[omega[i]];
  }

  SolveReport rep;
  std::vector<double> v(m, 0.0);
  if (dot(rhs, rhs) > 0.0) {
    if (probes_positive(p)) {
      v = cg_solve(p, rhs, &rep.iterations);
      rep.used_cg = true;
    } else {
      v = dense_solve(p, rhs);
      rep.used_cg = false;
      rep.iterations = 0;
    }
  }

  Field u = f;
  for (std::size_t i = 0; i < m; ++i) u[omega[i]] += v[i];

  // honest residual: re-apply the full operator to the assembled solution
  Field lu = frac_laplacian(u, p.s);
  Field rho(g);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t idx = omega[i];
    rho[idx] = lu[idx] + p.q[idx] * u[idx];
    if (interior_source) rho[idx] -= (*interior_source)[idx];
  }
  double scale = std::max(l2_norm(f),
                          interior_source ? l2_norm(*interior_source) : 0.0);
  rep.residual = scale > 0.0 ? l2_norm(rho) / scale : l2_norm(rho);
  if (report) *report = rep;
  return u;
}

std::vector<double> dirichlet_spectrum(const SchrodingerProblem& p,
                                       std::size_t k) {
  std::size_t m = p.mask.omega.size();
  require(k >= 1 && k <= m, Errc::BadConfig,
          "requested eigenvalue count exceeds the interior dimension");
  auto es = dense_eig(p);
  return std::vector<double>(es.eigenvalues().data(),
                             es.eigenvalues().data() + k);
}

namespace {

// Van der Corput radical inverse in the given base; k >= 1.
double radical_inverse(std::size_t k, unsigned base) {
  double inv = 1.0 / base, x = 0.0, f = inv;
  while (k) {
    x += f * double(k % base);
    k /= base;
    f *= inv;
  }
  return x;
}

}  // namespace

ExteriorBasis make_exterior_basis(const Grid& g, const RegionSpec& W,
                                  std::size_t count, double radius_frac) {
  require(count >= 1, Errc::BadConfig, "basis needs at least one element");
  require(radius_frac > 0.0 && radius_frac < 1.0, Errc::BadConfig,
          "radius fraction must sit in (0,1)");
  double rin = W.inscribed_radius(g.n);
  Point c0 = W.inscribed_center(g.n);
  double rho = radius_frac * rin;
  double reach = 0.98 * (rin - rho);
  require(reach > 0.0, Errc::BadConfig,
          "window too small for the requested bump radius");

  static const unsigned bases[3] = {2, 3, 5};
  ExteriorBasis basis;
  basis.radius = rho;
  std::size_t k = 1, tries = 0, cap = 10000 * count + 10000;
  while (basis.fields.size() < count) {
    require(++tries <= cap, Errc::BadConfig,
            "low-discrepancy sampling failed to fill the window");
    Point c = c0;
    double d2 = 0.0;
    for (int a = 0; a < g.n; ++a) {
      double off = (2.0 * radical_inverse(k, bases[a]) - 1.0) * reach;
      c[std::size_t(a)] += off;
      d2 += off * off;
    }
    ++k;
    if (W.shape == RegionSpec::Shape::ball && d2 > reach * reach) continue;
    Field f = make_bump(g, c, rho, 1.0);
    require(is_supported_in(f, W), Errc::SupportViolation,
            "basis bump leaks outside its window");
    basis.fields.push_back(std::move(f));
    basis.centers.push_back(c);
  }
  return basis;
}

double DNMatrix::symmetry_error() const {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      double d = at(i, j) - at(j, i);
      num += d * d;
      den += at(i, j) * at(i, j);
    }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

DNMatrix dn_map(const SchrodingerProblem& p, const ExteriorBasis& basis) {
  require(!basis.fields.empty(), Errc::BadConfig, "empty basis");
  for (const Field& f : basis.fields)
    require(f.grid == p.mask.grid, Errc::GridMismatch,
            "basis lives on a different grid than the problem");
  std::size_t dim = basis.fields.size();
  DNMatrix dn{dim, std::vector<double>(dim * dim, 0.0), basis.centers,
              basis.radius, p.s};

  std::vector<Field> half_data, half_sol, sols;
  half_data.reserve(dim);
  for (const Field& f : basis.fields)
    half_data.push_back(frac_laplacian(f, 0.5 * p.s));
  for (const Field& f : basis.fields) {
    Field u = solve_dirichlet(f, p);
    half_sol.push_back(frac_laplacian(u, 0.5 * p.s));
    sols.push_back(std::move(u));
  }
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      dn.entries[i * dim + j] =
          l2_inner(half_sol[i], half_data[j]) +
          l2_inner(pointwise(p.q, sols[i]), basis.fields[j]);
  return dn;
}

AlessandriniResult alessandrini_gap(const SchrodingerProblem& p1,
                                    const SchrodingerProblem& p2,
                                    const Field& f1, const Field& f2) {
  require(p1.mask.grid == p2.mask.grid && p1.mask.omega == p2.mask.omega,
          Errc::ConfigMismatch, "problems must share grid and interior");
  Field u1 = solve_dirichlet(f1, p1);
  Field u2 = solve_dirichlet(f2, p2);
  AlessandriniResult r;
  r.lhs = bilinear_form(u1, f2, p1) - bilinear_form(u2, f1, p2);
  Field dq = p1.q + (-1.0) * p2.q;
  r.rhs = l2_inner(pointwise(dq, u1), u2);
  r.gap = std::abs(r.lhs - r.rhs);
  return r;
}

RungeResult runge_approximate(const Field& target, const RegionSpec& W,
                              const SchrodingerProblem& p,
                              std::optional<double> delta,
                              std::size_t basis_size) {
  const Grid& g = p.mask.grid;
  require(target.grid == g, Errc::GridMismatch,
          "target lives on a different grid");
  require(is_supported_on(target, p.mask.omega), Errc::SupportViolation,
          "target must vanish off the interior");
  if (delta)
    require(*delta > 0.0, Errc::BadConfig, "delta must be positive");

  ExteriorBasis basis = make_exterior_basis(g, W, basis_size);
  std::size_t m = basis_size;

  // interior responses, column-equilibrated so delta penalizes coefficients
  // of unit-response columns: for a target in the span with representation
  // sum nu_i^{-1} a_i w_i the residual obeys r^2 <= delta * |a|^2.
  std::vector<Field> resp;
  std::vector<double> nu(m);
  resp.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    Field u = solve_dirichlet(basis.fields[i], p);
    Field v = masked(u, p.mask.omega);
    nu[i] = l2_norm(v);
    require(nu[i] > 0.0, Errc::ZeroField,
            "window element produces no interior response");
    resp.push_back(std::move(v));
  }

  const Eigen::Index mi = Eigen::Index(m);
  Eigen::MatrixXd G(mi, mi);
  Eigen::VectorXd b(mi);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double gij = l2_inner(resp[i], resp[j]) / (nu[i] * nu[j]);
      G(Eigen::Index(i), Eigen::Index(j)) = gij;
      G(Eigen::Index(j), Eigen::Index(i)) = gij;
    }
    b(Eigen::Index(i)) = l2_inner(resp[i], target) / nu[i];
  }

  // pure interior misfit of the coefficient vector, evaluated in field
  // space (no catastrophic cancellation in the quadratic form)
  auto misfit = [&](const Eigen::VectorXd& chat, std::size_t mm) {
    Field d = (-1.0) * target;
    for (std::size_t i = 0; i < mm; ++i)
      axpy(chat(Eigen::Index(i)) / nu[i], resp[i], d);
    return l2_norm(d);
  };
  auto solve_at = [&](double del, std::size_t mm) {
    Eigen::MatrixXd A = G.topLeftCorner(Eigen::Index(mm), Eigen::Index(mm));
    for (std::size_t i = 0; i < mm; ++i)
      A(Eigen::Index(i), Eigen::Index(i)) += del;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    require(ldlt.info() == Eigen::Success, Errc::NearSingular,
            "regularized normal equations failed to factor");
    return Eigen::VectorXd(ldlt.solve(b.head(Eigen::Index(mm))));
  };

  RungeResult out;
  if (delta) {
    out.delta_used = *delta;
  } else {
    // L-curve corner: the candidate farthest from the chord between the
    // extreme points of (log misfit, log coefficient norm)
    std::vector<double> cand;
    for (int e = -2; e >= -8; --e) cand.push_back(std::pow(10.0, e));
    std::vector<double> lr(cand.size()), ln(cand.size());
    for (std::size_t i = 0; i < cand.size(); ++i) {
      Eigen::VectorXd c = solve_at(cand[i], m);
      double r = misfit(c, m);
      out.sweep_deltas.push_back(cand[i]);
      out.sweep_residuals.push_back(r);
      lr[i] = std::log(std::max(r, 1e-300));
      ln[i] = std::log(std::max(c.norm(), 1e-300));
    }
    double ax = lr.front(), ay = ln.front();
    double bx = lr.back(), by = ln.back();
    double chord = std::hypot(bx - ax, by - ay);
    std::size_t best = cand.size() / 2;
    if (chord > 1e-12) {
      double best_d = -1.0;
      for (std::size_t i = 0; i < cand.size(); ++i) {
        double d = std::abs((bx - ax) * (ay - ln[i]) - (ax - lr[i]) * (by - ay)) / chord;
        if (d > best_d) {
          best_d = d;
          best = i;
        }
      }
    }
    out.delta_used = cand[best];
  }
  const double delta_used = out.delta_used;
  Eigen::VectorXd chat = solve_at(delta_used, m);

  out.residual_history.resize(m);
  for (std::size_t mm = 1; mm <= m; ++mm)
    out.residual_history[mm - 1] = misfit(solve_at(delta_used, mm), mm);

  out.coeffs.resize(m);
  for (std::size_t i = 0; i < m; ++i)
    out.coeffs[i] = chat(Eigen::Index(i)) / nu[i];

  out.f = Field(g);
  for (std::size_t i = 0; i < m; ++i) axpy(out.coeffs[i], basis.fields[i], out.f);
  // solve the combined data in one pass: coefficient cancellation happens in
  // the data, so solver residuals are not amplified by large coefficients
  out.u = solve_dirichlet(out.f, p);
  Field d = masked(out.u, p.mask.omega);
  axpy(-1.0, target, d);
  out.residual = l2_norm(d);

  Eigen::MatrixXd A = G;
  for (std::size_t i = 0; i < m; ++i) A(Eigen::Index(i), Eigen::Index(i)) += delta_used;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  require(es.info() == Eigen::Success, Errc::EigSolveFailure,
          "condition estimate failed");
  out.condition_estimate = es.eigenvalues()(Eigen::Index(m - 1)) / es.eigenvalues()(0);
  out.ill_conditioned = out.condition_estimate > 1e12;
  return out;
}

double recover_pairings(const SchrodingerProblem& p1,
                        const SchrodingerProblem& p2, const RegionSpec& W1,
                        const RegionSpec& W2, const Field& phi,
                        const Field& psi, std::size_t basis_size,
                        std::optional<double> delta) {
  require(p1.mask.grid == p2.mask.grid && p1.mask.omega == p2.mask.omega,
          Errc::ConfigMismatch, "problems must share grid and interior");
  require(phi.grid == p1.mask.grid && psi.grid == p1.mask.grid,
          Errc::GridMismatch, "test functions live on a different grid");
  require(is_supported_on(phi, p1.mask.omega), Errc::SupportViolation,
          "phi must vanish off the interior");
  require(is_supported_on(psi, p1.mask.omega), Errc::SupportViolation,
          "psi must vanish off the interior");
  double peak = 0.0;
  for (double v : phi.values) peak = std::max(peak, std::abs(v));
  for (std::size_t i = 0; i < phi.size(); ++i)
    if (std::abs(phi[i]) > 1e-14 * peak)
      require(std::abs(psi[i] - 1.0) <= 1e-12, Errc::BadConfig,
              "psi must equal one on the support of phi");

  RungeResult r1 = runge_approximate(phi, W1, p1, delta, basis_size);
  require(r1.residual <= 0.2 * l2_norm(phi), Errc::ApproximationTooCoarse,
          "window one cannot reach phi: residual " + std::to_string(r1.residual) +
              " against norm " + std::to_string(l2_norm(phi)));
  RungeResult r2 = runge_approximate(psi, W2, p2, delta, basis_size);
  require(r2.residual <= 0.2 * l2_norm(psi), Errc::ApproximationTooCoarse,
          "window two cannot reach psi: residual " + std::to_string(r2.residual) +
              " against norm " + std::to_string(l2_norm(psi)));

  return bilinear_form(r1.u, r2.f, p1) - bilinear_form(r2.u, r1.f, p2);
}

}  // namespace fraclab
