#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "doctest.h"
#include "fraclab/errors.hpp"
#include "fraclab/field.hpp"
#include "fraclab/schrodinger.hpp"
#include "fraclab/spectral.hpp"
#include "oracles.hpp"

using namespace fraclab;

namespace {

// Standard layout on [-2,2): interior ball at the origin flanked by two
// exterior windows, all inside the half-box padding margin.
DomainMask standard_mask(const Grid& g) {
  return DomainMask::make(g, RegionSpec::ball({0.0, 0.0, 0.0}, 0.5),
                          RegionSpec::ball({-0.8, 0.0, 0.0}, 0.15),
                          RegionSpec::ball({0.8, 0.0, 0.0}, 0.15));
}

Field omega_indicator_scaled(const DomainMask& m, double c) {
  Field q(m.grid);
  for (std::size_t f : m.omega) q[f] = c;
  return q;
}

}  // namespace

TEST_SUITE_BEGIN("schrodinger");

TEST_CASE("problem construction validates exponent and support") {
  Grid g = Grid::make(1, 64, 2.0);
  DomainMask m = standard_mask(g);
  Field q(g);
  CHECK_NOTHROW(SchrodingerProblem::make(m, 0.7, q));
  CHECK_NOTHROW(SchrodingerProblem::make(m, 1.4, q));
  CHECK_THROWS_AS(SchrodingerProblem::make(m, 1.0, q), Error);
  CHECK_THROWS_AS(SchrodingerProblem::make(m, -0.5, q), Error);
  Field stray = make_bump(g, {0.8, 0.0, 0.0}, 0.1, 1.0);  // sits in w2
  CHECK_THROWS_AS(SchrodingerProblem::make(m, 0.7, stray), Error);
}

TEST_CASE("bilinear form on a single mode matches the symbol value") {
  Grid g = Grid::make(1, 64, 3.14159265358979323846);
  DomainMask m = DomainMask::make(g, RegionSpec::ball({0.0, 0.0, 0.0}, 0.5),
                                  RegionSpec::ball({-1.2, 0.0, 0.0}, 0.2),
                                  RegionSpec::ball({1.2, 0.0, 0.0}, 0.2));
  double s = 0.7;
  auto p = SchrodingerProblem::make(m, s, Field(g));
  Field u = make_cos_mode(g, {3, 0, 0});
  // xi = 3 on this box, so B_0(u,u) = 3^{2s} ||u||^2 = 9^s * pi
  double want = std::pow(9.0, s) * 3.14159265358979323846;
  CHECK(bilinear_form(u, u, p) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("bilinear form is symmetric and matches independent assembly") {
  Grid g = Grid::make(1, 128, 2.0);
  DomainMask m = standard_mask(g);
  double s = 0.6;
  Field q = make_bump(g, {0.0, 0.0, 0.0}, 0.4, 0.8);
  auto p = SchrodingerProblem::make(m, s, q);
  Field v = random_band_limited(g, 20, 91);
  Field w = random_band_limited(g, 20, 92);
  double bvw = bilinear_form(v, w, p);
  double bwv = bilinear_form(w, v, p);
  CHECK(bvw == doctest::Approx(bwv).epsilon(1e-12));
  // independent route: <(-Lap)^s v + q v, w>
  Field lv = frac_laplacian(v, s);
  Field qv = pointwise(q, v);
  double direct = l2_inner(lv, w) + l2_inner(qv, w);
  CHECK(bvw == doctest::Approx(direct).epsilon(1e-11));
}

TEST_CASE("zero exterior data gives the zero solution") {
  Grid g = Grid::make(1, 128, 2.0);
  DomainMask m = standard_mask(g);
  auto p = SchrodingerProblem::make(m, 0.8, Field(g));
  Field u = solve_dirichlet(Field(g), p);
  CHECK(l2_norm(u) <= 1e-15);
}

TEST_CASE("manufactured interior solution: positive-definite path") {
  Grid g = Grid::make(1, 256, 2.0);
  DomainMask m = standard_mask(g);
  double s = 0.8;
  Field q = make_bump(g, {0.0, 0.0, 0.0}, 0.45, 0.5);  // q >= 0
  auto p = SchrodingerProblem::make(m, s, q);
  Field vstar = make_bump(g, {0.1, 0.0, 0.0}, 0.25, 1.0);
  Field source = masked(frac_laplacian(vstar, s) + pointwise(q, vstar), m.omega);
  SolveReport rep;
  Field u = solve_dirichlet(Field(g), p, &rep, &source);
  CHECK(rep.used_cg);
  CHECK(oracles::rel_err(u, vstar) <= 1e-9);
}

TEST_CASE("manufactured interior solution: dense indefinite path") {
  Grid g = Grid::make(1, 128, 2.0);
  DomainMask m = standard_mask(g);
  double s = 0.6;
  // strongly negative potential makes the form indefinite
  Field q = omega_indicator_scaled(m, -250.0);
  auto p = SchrodingerProblem::make(m, s, q);
  CHECK(dirichlet_spectrum(p, 1)[0] < 0.0);
  Field vstar = make_bump(g, {-0.05, 0.0, 0.0}, 0.3, 1.0);
  Field source = masked(frac_laplacian(vstar, s) + pointwise(q, vstar), m.omega);
  SolveReport rep;
  Field u = solve_dirichlet(Field(g), p, &rep, &source);
  CHECK(!rep.used_cg);
  CHECK(oracles::rel_err(u, vstar) <= 1e-9);
}

TEST_CASE("exterior data drives a solve with tiny variational residual") {
  Grid g = Grid::make(1, 256, 2.0);
  DomainMask m = standard_mask(g);
  double s = 0.6;
  Field q = make_bump(g, {0.05, 0.0, 0.0}, 0.4, 0.7);
  auto p = SchrodingerProblem::make(m, s, q);
  Field f = make_bump(g, {-0.8, 0.0, 0.0}, 0.12, 1.0);
  SolveReport rep;
  Field u = solve_dirichlet(f, p, &rep);
  CHECK(rep.residual <= 1e-10);
  // independent residual recomputation over the interior
  Field rho = masked(frac_laplacian(u, s) + pointwise(q, u), m.omega);
  CHECK(l2_norm(rho) <= 1e-10 * l2_norm(f));
  // u equals f away from the interior correction
  Field diff = u + (-1.0) * f;
  CHECK(is_supported_on(diff, m.omega));
  // exterior determinism: a second solve is bit-identical
  Field u2 = solve_dirichlet(f, p);
  CHECK(std::equal(u.values.begin(), u.values.end(), u2.values.begin()));
  // data leaking into the interior is rejected
  Field bad = make_bump(g, {0.0, 0.0, 0.0}, 0.2, 1.0);
  CHECK_THROWS_AS(solve_dirichlet(bad, p), Error);
}

TEST_CASE("interior spectrum: positivity, shift, dense oracle") {
  Grid g = Grid::make(1, 32, 2.0);
  DomainMask m = standard_mask(g);
  double s = 0.7;
  Field q = make_bump(g, {0.0, 0.0, 0.0}, 0.4, 0.9);
  auto p = SchrodingerProblem::make(m, s, q);

  auto ev = dirichlet_spectrum(p, 4);
  CHECK(ev.size() == 4);
  for (std::size_t i = 0; i < ev.size(); ++i) {
    CHECK(ev[i] > 0.0);  // q >= 0
    if (i) CHECK(ev[i] >= ev[i - 1]);
  }

  // adding a constant on the interior shifts every eigenvalue by it
  Field q2 = q;
  for (std::size_t f : m.omega) q2[f] += 2.0;
  auto p2 = SchrodingerProblem::make(m, s, q2);
  auto ev2 = dirichlet_spectrum(p2, 4);
  for (std::size_t i = 0; i < ev.size(); ++i)
    CHECK(ev2[i] == doctest::Approx(ev[i] + 2.0).epsilon(1e-9));

  // dense oracle built from the naive-DFT multiplier, column by column
  std::size_t mm = m.omega.size();
  Eigen::MatrixXd M(mm, mm);
  for (std::size_t j = 0; j < mm; ++j) {
    Field delta(g);
    delta[m.omega[j]] = 1.0;
    Field col = oracles::naive_multiplier(
        delta, [&](double x2) { return std::pow(x2, s); }, 0.0);
    for (std::size_t i = 0; i < mm; ++i)
      M(Eigen::Index(i), Eigen::Index(j)) =
          col[m.omega[i]] + (i == j ? q[m.omega[i]] : 0.0);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
  CHECK(dirichlet_spectrum(p, 1)[0] ==
        doctest::Approx(es.eigenvalues()(0)).epsilon(1e-8));
}

TEST_CASE("measurement matrix: symmetry, entry recompute, potential derivative") {
  Grid g = Grid::make(1, 128, 2.0);
  DomainMask m = standard_mask(g);
  double s = 0.7;
  Field q = make_bump(g, {0.0, 0.0, 0.0}, 0.4, 0.6);
  auto p = SchrodingerProblem::make(m, s, q);
  ExteriorBasis basis =
      make_exterior_basis(g, RegionSpec::ball({-0.8, 0.0, 0.0}, 0.15), 6, 0.35);
  DNMatrix dn = dn_map(p, basis);
  CHECK(dn.dim == 6);
  CHECK(dn.symmetry_error() <= 1e-10);

  // one entry, recomputed from scratch
  Field u1 = solve_dirichlet(basis.fields[1], p);
  CHECK(dn.at(1, 2) ==
        doctest::Approx(bilinear_form(u1, basis.fields[2], p)).epsilon(1e-12));

  // derivative of a diagonal entry in a constant interior shift equals the
  // interior mass of the solution
  double c = 1e-4;
  Field qp = q, qm = q;
  for (std::size_t f : m.omega) {
    qp[f] += c;
    qm[f] -= c;
  }
  auto pp = SchrodingerProblem::make(m, s, qp);
  auto pm = SchrodingerProblem::make(m, s, qm);
  DNMatrix dnp = dn_map(pp, basis), dnm = dn_map(pm, basis);
  double fd = (dnp.at(0, 0) - dnm.at(0, 0)) / (2.0 * c);
  Field u0 = solve_dirichlet(basis.fields[0], p);
  double mass = l2_norm(masked(u0, m.omega));
  CHECK(fd == doctest::Approx(mass * mass).epsilon(0.05));
}

TEST_CASE("alessandrini identity: cancellation, gap, bilinearity") {
  Grid g = Grid::make(1, 128, 2.0);
  DomainMask m = standard_mask(g);
  double s = 0.6;
  Field q1 = make_bump(g, {-0.1, 0.0, 0.0}, 0.3, 0.8);
  Field q2 = make_bump(g, {0.1, 0.0, 0.0}, 0.25, 0.5);
  auto p1 = SchrodingerProblem::make(m, s, q1);
  auto p2 = SchrodingerProblem::make(m, s, q2);
  Field f1 = make_bump(g, {-0.8, 0.0, 0.0}, 0.12, 1.0);
  Field f2 = make_bump(g, {0.8, 0.0, 0.0}, 0.12, 1.0);

  double scale = l2_norm(f1) * l2_norm(f2);
  AlessandriniResult same = alessandrini_gap(p1, p1, f1, f2);
  CHECK(std::abs(same.lhs) <= 1e-12 * scale);
  CHECK(std::abs(same.rhs) <= 1e-12 * scale);

  AlessandriniResult r = alessandrini_gap(p1, p2, f1, f2);
  CHECK(r.gap <= 1e-8 * std::max({std::abs(r.lhs), std::abs(r.rhs), scale}));

  AlessandriniResult r2 = alessandrini_gap(p1, p2, 2.0 * f1, f2);
  CHECK(r2.lhs == doctest::Approx(2.0 * r.lhs).epsilon(1e-12));
  CHECK(r2.rhs == doctest::Approx(2.0 * r.rhs).epsilon(1e-12));
}

TEST_CASE("runge approximation: achievable target and extreme regularization") {
  Grid g = Grid::make(1, 256, 2.0);
  DomainMask m = standard_mask(g);
  RegionSpec w1 = RegionSpec::ball({-0.8, 0.0, 0.0}, 0.15);
  auto p = SchrodingerProblem::make(m, 0.8, Field(g));
  ExteriorBasis basis = make_exterior_basis(g, w1, 8, 0.3);
  Field ustar = solve_dirichlet(basis.fields[3], p);
  Field target = masked(ustar, m.omega);
  double gn = l2_norm(target);

  RungeResult r = runge_approximate(target, w1, p, 1e-12, 8);
  CHECK(r.residual <= 1e-6 * gn);
  CHECK(r.coeffs.size() == 8);
  CHECK(r.residual_history.size() == 8);
  // prefix residuals decrease up to the regularization floor sqrt(delta)*|g|
  double floor = 2.0 * std::sqrt(1e-12) * gn;
  for (std::size_t i = 1; i < r.residual_history.size(); ++i)
    CHECK(r.residual_history[i] <= r.residual_history[i - 1] + floor);
  CHECK(r.residual_history.back() <= 1.5e-6 * gn);

  RungeResult heavy = runge_approximate(target, w1, p, 1e6, 8);
  CHECK(heavy.residual >= 0.999 * gn);
  CHECK(heavy.residual <= gn * (1.0 + 1e-10));
  CHECK(l2_norm(heavy.f) <= 1e-3);
}

TEST_CASE("runge approximation reaches the default smooth target") {
  Grid g = Grid::make(1, 256, 2.0);
  DomainMask m = standard_mask(g);
  RegionSpec w1 = RegionSpec::ball({-0.8, 0.0, 0.0}, 0.15);
  Field q = make_bump(g, {0.0, 0.0, 0.0}, 0.4, 0.4);
  auto p = SchrodingerProblem::make(m, 0.8, q);
  // a bump filling the interior: no interior flat-zero band, so it sits
  // close to the span of window responses
  Field target = make_bump(g, {0.0, 0.0, 0.0}, 0.5, 1.0);

  RungeResult r = runge_approximate(target, w1, p, std::nullopt, 32);
  CHECK(r.delta_used >= 1e-8);
  CHECK(r.delta_used <= 1e-2);
  CHECK(r.condition_estimate > 0.0);
  REQUIRE(r.sweep_residuals.size() == 7);
  double best = *std::min_element(r.sweep_residuals.begin(),
                                  r.sweep_residuals.end());
  CHECK(best <= 0.1 * l2_norm(target));
  // the corner never does worse than the flat end of the curve
  CHECK(r.residual <= r.sweep_residuals.front() * (1.0 + 1e-12));
}

TEST_CASE("recovered pairings match direct quadrature and stay linear") {
  Grid g = Grid::make(1, 256, 2.0);
  DomainMask m = standard_mask(g);
  RegionSpec w1 = RegionSpec::ball({-0.8, 0.0, 0.0}, 0.15);
  RegionSpec w2 = RegionSpec::ball({0.8, 0.0, 0.0}, 0.15);
  double s = 0.8;
  // sweet spot: smaller delta inflates exterior coefficients (and with them
  // the cancellation noise in the pairing), larger delta degrades the fits
  double delta = 1e-7;
  Field q1 = make_bump(g, {-0.15, 0.0, 0.0}, 0.25, 0.6);
  Field dq = make_bump(g, {0.0, 0.0, 0.0}, 0.48, 0.5);
  Field q2 = q1 + (-1.0) * dq;
  auto p1 = SchrodingerProblem::make(m, s, q1);
  auto p2 = SchrodingerProblem::make(m, s, q2);

  // phi narrower than the potential difference, psi a plateau over it
  Field phi = make_bump(g, {0.0, 0.0, 0.0}, 0.44, 1.0);
  Field psi = make_cutoff(g, {0.0, 0.0, 0.0}, 0.45, 0.498);

  double est = recover_pairings(p1, p2, w1, w2, phi, psi, 32, delta);
  double direct = l2_inner(dq, phi);
  CHECK(std::abs(est - direct) <= 0.15 * std::abs(direct));

  double est2 = recover_pairings(p1, p2, w1, w2, 2.0 * phi, psi, 32, delta);
  CHECK(est2 == doctest::Approx(2.0 * est).epsilon(1e-9));

  double same = recover_pairings(p1, p1, w1, w2, phi, psi, 16, delta);
  CHECK(std::abs(same) <= 1e-6 * l2_norm(phi));
}

TEST_CASE("recovery refuses targets the window cannot reach") {
  Grid g = Grid::make(1, 128, 2.0);
  DomainMask m = standard_mask(g);
  RegionSpec w1 = RegionSpec::ball({-0.8, 0.0, 0.0}, 0.15);
  RegionSpec w2 = RegionSpec::ball({0.8, 0.0, 0.0}, 0.15);
  auto p = SchrodingerProblem::make(m, 0.6, Field(g));
  // oscillatory interior target far outside the reach of a tiny basis
  Field wiggle = pointwise(make_sin_mode(g, {40, 0, 0}),
                           make_bump(g, {0.0, 0.0, 0.0}, 0.35, 1.0));
  Field psi = make_cutoff(g, {0.0, 0.0, 0.0}, 0.38, 0.46);
  CHECK_THROWS_AS(recover_pairings(p, p, w1, w2, wiggle, psi, 4), Error);
}

TEST_SUITE_END();
