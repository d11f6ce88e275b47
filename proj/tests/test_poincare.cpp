#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fraclab/errors.hpp"
#include "fraclab/field.hpp"
#include "fraclab/poincare.hpp"
#include "fraclab/rng.hpp"
#include "fraclab/spectral.hpp"
#include "oracles.hpp"

using namespace fraclab;

TEST_SUITE_BEGIN("poincare");

TEST_CASE("simple constant matches the hand-computed value") {
  // |K| = |B(0,1)| = 2 in 1-D, so sqrt(2) * (2*2*2)^{1/2} = 4 at s=1/2, t=0
  Grid g = Grid::make(1, 64, 2.0);
  RegionSpec K = RegionSpec::ball({0.0, 0.0, 0.0}, 1.0);
  double c = theoretical_constant(ConstantKind::simple, g, K, 0.5, 0.0);
  CHECK(c == doctest::Approx(4.0).epsilon(1e-13));
  // same exponent difference, same constant
  double c2 = theoretical_constant(ConstantKind::simple, g, K, 1.5, 1.0);
  CHECK(c2 == doctest::Approx(4.0).epsilon(1e-13));
}

TEST_CASE("frequency-split constant: closed form, sweep minimum, eps guard") {
  Grid g = Grid::make(1, 64, 2.0);
  RegionSpec K = RegionSpec::ball({0.0, 0.0, 0.0}, 1.0);
  // |K||B(0,1)| = 4: c(eps) = eps^{-1/2} / sqrt(1 - 4 eps) at s=1/2, t=0
  double c = theoretical_constant(ConstantKind::freq_split, g, K, 0.5, 0.0, 0.1);
  CHECK(c == doctest::Approx(std::pow(0.1, -0.5) / std::sqrt(0.6)).epsilon(1e-13));
  // admissible eps is (0, 1/4)
  CHECK_THROWS_AS(
      theoretical_constant(ConstantKind::freq_split, g, K, 0.5, 0.0, 0.25),
      Error);
  CHECK_THROWS_AS(
      theoretical_constant(ConstantKind::freq_split, g, K, 0.5, 0.0, 0.3),
      Error);
  // sweep minimum is no worse than the half-mass choice behind "simple"
  double swept = theoretical_constant(ConstantKind::freq_split, g, K, 0.5, 0.0);
  double simple = theoretical_constant(ConstantKind::simple, g, K, 0.5, 0.0);
  CHECK(swept <= simple * (1.0 + 1e-4));
  CHECK(swept > 0.0);
  // s = t: the bound degenerates to ~1 as eps -> 0
  double unit = theoretical_constant(ConstantKind::freq_split, g, K, 0.7, 0.7);
  CHECK(unit >= 1.0);
  CHECK(unit <= 1.0 + 1e-2);
}

TEST_CASE("masked Dirichlet eigenvalue matches the interval closed form") {
  Grid g = Grid::make(1, 256, 2.0);
  RegionSpec K = RegionSpec::ball({0.0, 0.0, 0.0}, 1.0);
  double lam = dirichlet_lambda1(g, K);
  double want = oracles::fd_dirichlet_lambda1_interval(2.0, g.h);
  CHECK(lam == doctest::Approx(want).epsilon(1e-10));
  // classical constant approaches 2/pi for the unit-radius interval
  double C = classical_constant(g, K);
  CHECK(C == doctest::Approx(0.63662).epsilon(2e-4));
}

TEST_CASE("2-D box eigenvalue is the tensor sum of interval eigenvalues") {
  Grid g = Grid::make(2, 64, 2.0);
  RegionSpec K = RegionSpec::box({-1.0, -0.5, 0.0}, {1.0, 0.5, 0.0});
  double lam = dirichlet_lambda1(g, K);
  double want = oracles::fd_dirichlet_lambda1_interval(2.0, g.h) +
                oracles::fd_dirichlet_lambda1_interval(1.0, g.h);
  CHECK(lam == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("interpolation-kind constant and exponent-order guards") {
  Grid g = Grid::make(1, 256, 2.0);
  RegionSpec K = RegionSpec::ball({0.0, 0.0, 0.0}, 1.0);
  double c10 = theoretical_constant(ConstantKind::interp, g, K, 1.0, 0.0);
  CHECK(c10 == doctest::Approx(0.63662).epsilon(2e-4));
  // s = t gives C^0 = 1 exactly
  CHECK(theoretical_constant(ConstantKind::interp, g, K, 1.3, 1.3) ==
        doctest::Approx(1.0).epsilon(1e-14));
  // t <= s < 1 with t > 0 is outside both validity branches
  CHECK_THROWS_AS(theoretical_constant(ConstantKind::interp, g, K, 0.8, 0.3),
                  Error);
  // s < t rejected for every kind
  for (auto kind :
       {ConstantKind::freq_split, ConstantKind::simple, ConstantKind::interp})
    CHECK_THROWS_AS(theoretical_constant(kind, g, K, 0.5, 1.0), Error);
}

TEST_CASE("ratio agrees with the Sobolev-seminorm route") {
  Grid g = Grid::make(1, 128, 2.0);
  RegionSpec K = RegionSpec::ball({0.0, 0.0, 0.0}, 1.0);
  Field u = random_bump_superposition(g, {0.0, 0.0, 0.0}, 1.0, 5, 314);
  double r = poincare_ratio(u, K, 1.5, 0.7);
  double want = sobolev_norm(u, 0.7, true) / sobolev_norm(u, 1.5, true);
  CHECK(r == doctest::Approx(want).epsilon(1e-11));
}

TEST_CASE("ratio edge cases: equal exponents, zero field, support escape") {
  Grid g = Grid::make(1, 128, 2.0);
  RegionSpec K = RegionSpec::ball({0.0, 0.0, 0.0}, 1.0);
  Field u = make_bump(g, {0.1, 0.0, 0.0}, 0.6, 1.0);
  CHECK(poincare_ratio(u, K, 0.8, 0.8) == doctest::Approx(1.0).epsilon(1e-12));
  Field z(g);
  CHECK_THROWS_AS(poincare_ratio(z, K, 1.0, 0.0), Error);
  Field w = make_bump(g, {1.2, 0.0, 0.0}, 0.2, 1.0);
  CHECK_THROWS_AS(poincare_ratio(w, K, 1.0, 0.0), Error);
  CHECK_THROWS_AS(poincare_ratio(u, K, 0.5, 1.0), Error);
}

TEST_CASE("ratio is refinement-stable and below the paper bound") {
  RegionSpec K = RegionSpec::ball({0.0, 0.0, 0.0}, 1.0);
  double r128, r256;
  {
    Grid g = Grid::make(1, 128, 2.0);
    r128 = poincare_ratio(make_bump(g, {0.0, 0.0, 0.0}, 0.8, 1.0), K, 0.5, 0.0);
  }
  {
    Grid g = Grid::make(1, 256, 2.0);
    r256 = poincare_ratio(make_bump(g, {0.0, 0.0, 0.0}, 0.8, 1.0), K, 0.5, 0.0);
  }
  CHECK(std::abs(r128 - r256) / r256 <= 0.01);
  CHECK(r256 <= 4.0);  // simple-kind constant for this K
}

TEST_CASE("sweep over seeded samples reports zero violations") {
  Grid g = Grid::make(1, 128, 2.0);
  RegionSpec K = RegionSpec::ball({0.0, 0.0, 0.0}, 1.0);
  SamplerConfig cfg;
  cfg.num_samples = 20;
  cfg.seed = 42;
  struct Case {
    double s, t;
    ConstantKind kind;
  };
  for (auto [s, t, kind] : {Case{0.5, 0.0, ConstantKind::simple},
                            Case{1.5, 0.0, ConstantKind::simple},
                            Case{1.5, 1.0, ConstantKind::interp},
                            Case{2.5, 1.0, ConstantKind::interp}}) {
    ViolationReport rep = verify_sweep(g, K, cfg, s, t, kind);
    CHECK(rep.violations == 0);
    CHECK(rep.samples == 20);
    CHECK(rep.rows.size() == 20);
    CHECK(rep.max_ratio > 0.0);
    CHECK(rep.max_ratio <= rep.constant);
  }
}

TEST_CASE("single-sample sweep reproduces the ratio of the derived seed") {
  Grid g = Grid::make(1, 128, 2.0);
  RegionSpec K = RegionSpec::ball({0.0, 0.0, 0.0}, 1.0);
  SamplerConfig cfg;
  cfg.num_samples = 1;
  cfg.seed = 7;
  ViolationReport rep =
      verify_sweep(g, K, cfg, 0.5, 0.0, ConstantKind::simple);
  Field u = random_bump_superposition(g, {0.0, 0.0, 0.0}, 1.0, cfg.max_bumps,
                                      Rng::derive(7, 0));
  CHECK(rep.max_ratio ==
        doctest::Approx(poincare_ratio(u, K, 0.5, 0.0)).epsilon(1e-14));
}

TEST_CASE("homogeneous-norm interpolation inequality holds on sampled fields") {
  Grid g = Grid::make(1, 128, 2.0);
  const double levels[] = {0.0, 0.5, 1.0, 1.5, 2.0};
  for (int trial = 0; trial < 5; ++trial) {
    Field u = random_band_limited(g, 12, 500 + trial);
    double m = mean(u);
    for (auto& x : u.values) x -= m;  // interpolation needs no compact support
    for (double s0 : levels)
      for (double r : levels)
        for (double s1 : levels) {
          if (!(s0 < r && r < s1)) continue;
          double theta = (r - s0) / (s1 - s0);
          double lhs = sobolev_norm(u, r, true);
          double rhs = std::pow(sobolev_norm(u, s0, true), 1.0 - theta) *
                       std::pow(sobolev_norm(u, s1, true), theta);
          CHECK(lhs <= rhs * (1.0 + 1e-9));
        }
  }
}

TEST_CASE("violation report round-trips to CSV and JSON") {
  Grid g = Grid::make(1, 64, 2.0);
  RegionSpec K = RegionSpec::ball({0.0, 0.0, 0.0}, 1.0);
  SamplerConfig cfg;
  cfg.num_samples = 3;
  ViolationReport rep =
      verify_sweep(g, K, cfg, 0.5, 0.0, ConstantKind::simple);
  rep.write_csv("poincare_report_test.csv");
  rep.write_json("poincare_report_test.json");
  std::ifstream csv("poincare_report_test.csv");
  std::stringstream ss;
  ss << csv.rdbuf();
  CHECK(ss.str().find("sample_id,ratio,constant,violated") != std::string::npos);
  std::ifstream js("poincare_report_test.json");
  std::stringstream sj;
  sj << js.rdbuf();
  CHECK(sj.str().find("\"violations\": 0") != std::string::npos);
  std::remove("poincare_report_test.csv");
  std::remove("poincare_report_test.json");
}

TEST_SUITE_END();
