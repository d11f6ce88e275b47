#include "fraclab/ucp_probe.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "fraclab/errors.hpp"
#include "fraclab/spectral.hpp"

namespace fraclab {
namespace {

bool integer_power(double s) { return s >= 1.0 && s <= 16.0 && s == std::floor(s); }

// (-Lap)^s with the locality-preserving realization for integer s.
Field apply_power(const Field& u, double s) {
  if (s == 0.0) return u;
  if (integer_power(s)) return stencil_laplacian(u, int(s));
  return frac_laplacian(u, s, /*project_zero_mode=*/s < 0.0);
}

// Torus distance between coordinates (period 2L per axis).
double torus_delta(double a, double b, double L) {
  double d = std::abs(a - b);
  double period = 2.0 * L;
  d = std::fmod(d, period);
  return std::min(d, period - d);
}

// Analytic torus distance from x to the region (0 inside).
double region_distance(const Grid& g, const RegionSpec& r, const Point& x) {
  if (r.shape == RegionSpec::Shape::ball) {
    double d2 = 0.0;
    for (int a = 0; a < g.n; ++a) {
      double d = torus_delta(x[a], r.center[a], g.L);
      d2 += d * d;
    }
    return std::max(0.0, std::sqrt(d2) - r.radius);
  }
  double d2 = 0.0;
  for (int a = 0; a < g.n; ++a) {
    double best = std::numeric_limits<double>::max();
    for (int im = -1; im <= 1; ++im) {
      double xa = x[a] + 2.0 * g.L * im;
      double d = std::max({0.0, r.lo[a] - xa, xa - r.hi[a]});
      best = std::min(best, d);
    }
    d2 += best * best;
  }
  return std::sqrt(d2);
}

Point grid_point(const Grid& g, std::size_t flat) {
  auto idx = g.unflatten(flat);
  Point x{0.0, 0.0, 0.0};
  for (int a = 0; a < g.n; ++a) x[a] = g.coord(idx[a]);
  return x;
}

// Wavevector orbit representatives with the first nonzero component positive,
// ordered by |k|^2 then lexicographically.
std::vector<std::array<int, 3>> mode_orbits(int n, int kb) {
  std::vector<std::array<int, 3>> out;
  int lo1 = n >= 2 ? -kb : 0, lo2 = n >= 3 ? -kb : 0;
  int hi1 = n >= 2 ? kb : 0, hi2 = n >= 3 ? kb : 0;
  for (int k0 = -kb; k0 <= kb; ++k0)
    for (int k1 = lo1; k1 <= hi1; ++k1)
      for (int k2 = lo2; k2 <= hi2; ++k2) {
        int first = k0 != 0 ? k0 : (k1 != 0 ? k1 : k2);
        if (first <= 0) continue;  // k = 0 handled separately; one rep per +-k orbit
        out.push_back({k0, k1, k2});
      }
  std::sort(out.begin(), out.end(), [](const std::array<int, 3>& a, const std::array<int, 3>& b) {
    long long na = (long long)a[0] * a[0] + (long long)a[1] * a[1] + (long long)a[2] * a[2];
    long long nb = (long long)b[0] * b[0] + (long long)b[1] * b[1] + (long long)b[2] * b[2];
    if (na != nb) return na < nb;
    return a < b;
  });
  return out;
}

Field normalized(Field f) {
  double nrm = l2_norm(f);
  require(nrm > 0.0, Errc::ZeroField, "subspace member collapsed to zero");
  for (double& v : f.values) v /= nrm;
  return f;
}

}  // namespace

std::vector<Field> probe_subspace(const Grid& g, const RegionSpec& v, int dim, int witnesses) {
  require(dim >= 1, Errc::BadConfig, "subspace dimension must be positive");
  require(witnesses >= 0 && witnesses < dim, Errc::BadConfig,
          "witness count must be in [0, dim)");
  int modes = dim - witnesses;

  std::vector<Field> members;
  members.reserve(std::size_t(dim));
  if (modes >= 1) members.push_back(normalized(Field(g, std::vector<double>(g.size(), 1.0))));
  int kb = 2;
  auto orbits = mode_orbits(g.n, kb);
  while (int(members.size()) < modes) {
    std::size_t need_orbit = (members.size() - 1) / 2;  // two members per orbit
    if (need_orbit >= orbits.size()) {
      require(kb <= 4 * g.N, Errc::BadConfig, "subspace dimension too large");
      kb *= 2;
      orbits = mode_orbits(g.n, kb);
      continue;
    }
    const auto& k = orbits[need_orbit];
    require(std::max({std::abs(k[0]), std::abs(k[1]), std::abs(k[2])}) <= g.N / 2 - 1,
            Errc::BadConfig, "subspace dimension exceeds the grid's resolvable band");
    if (members.size() % 2 == 1)
      members.push_back(normalized(make_cos_mode(g, k)));
    else
      members.push_back(normalized(make_sin_mode(g, k)));
  }

  if (witnesses > 0) {
    require(!region_indices(g, v).empty(), Errc::BadConfig, "region is empty on this grid");
    struct Placed {
      Point c;
      double rho;
    };
    std::vector<Placed> placed;
    for (int w = 0; w < witnesses; ++w) {
      double best = -1.0;
      Point bc{0.0, 0.0, 0.0};
      for (std::size_t i = 0; i < g.size(); ++i) {
        Point x = grid_point(g, i);
        double seam_room = g.L;
        for (int a = 0; a < g.n; ++a) seam_room = std::min(seam_room, g.L - std::abs(x[a]));
        double score = std::min(region_distance(g, v, x), seam_room);
        for (const Placed& p : placed) {
          double d2 = 0.0;
          for (int a = 0; a < g.n; ++a) {
            double d = torus_delta(x[a], p.c[a], g.L);
            d2 += d * d;
          }
          score = std::min(score, std::sqrt(d2) - p.rho);
        }
        if (score > best + 1e-12 * g.L) {  // strict improvement; first index wins ties
          best = score;
          bc = x;
        }
      }
      // leave at least four cells of clearance to the region, the seam, and
      // other witnesses, and keep the bump itself at least two cells wide
      require(best >= 6.0 * g.h, Errc::BadConfig,
              "no room for a witness bump outside the region");
      placed.push_back({bc, std::min(0.6 * best, best - 4.0 * g.h)});
    }
    for (const Placed& p : placed)
      members.push_back(normalized(make_bump(g, p.c, p.rho, 1.0)));
  }
  return members;
}

UcpSpectrumResult ucp_quadratic_min(double s, const Grid& g, const RegionSpec& v,
                                    int subspace_dim, int witnesses) {
  auto vin = region_indices(g, v);
  require(!vin.empty(), Errc::BadConfig, "region is empty on this grid");
  for (std::size_t i : vin) {
    auto idx = g.unflatten(i);
    for (int a = 0; a < g.n; ++a)
      require(idx[a] >= 2 && idx[a] <= g.N - 3, Errc::MarginTooSmall,
              "region must stay strictly inside the padded box");
  }
  std::vector<Field> members = probe_subspace(g, v, subspace_dim, witnesses);
  const int dim = int(members.size());
  double hn = 1.0;
  for (int a = 0; a < g.n; ++a) hn *= g.h;

  std::vector<Field> powers;
  powers.reserve(std::size_t(dim));
  for (const Field& m : members) powers.push_back(apply_power(m, s));

  Eigen::MatrixXd q(dim, dim), gram(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) {
      double sv = 0.0;
      for (std::size_t idx : vin)
        sv += members[std::size_t(i)][idx] * members[std::size_t(j)][idx] +
              powers[std::size_t(i)][idx] * powers[std::size_t(j)][idx];
      q(i, j) = q(j, i) = hn * sv;
      gram(i, j) = gram(j, i) = l2_inner(members[std::size_t(i)], members[std::size_t(j)]);
    }

  UcpSpectrumResult res;
  res.s = s;
  res.N = g.N;

  // an identically vanishing form row is an exact null direction of the
  // positive semidefinite form: report it without solver noise
  for (int i = 0; i < dim; ++i) {
    bool zero_row = true;
    for (int j = 0; j < dim && zero_row; ++j) zero_row = q(i, j) == 0.0;
    if (zero_row) {
      res.lambda_min = 0.0;
      res.witness = members[std::size_t(i)];
      return res;
    }
  }

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(q, gram);
  require(eig.info() == Eigen::Success, Errc::EigSolveFailure,
          "generalized eigensolve did not converge");
  double lam = eig.eigenvalues()(0);
  // Q is a Gram matrix; eigenvalues can only dip below zero by roundoff
  double noise = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, q.norm());
  if (lam < 0.0) {
    require(lam >= -noise, Errc::EigSolveFailure, "negative eigenvalue beyond roundoff");
    lam = 0.0;
  }
  res.lambda_min = lam;
  Field w(g);
  for (int i = 0; i < dim; ++i) axpy(eig.eigenvectors()(i, 0), members[std::size_t(i)], w);
  res.witness = normalized(std::move(w));
  return res;
}

double locality_contrast(double s_frac, double s_int, const Grid& g, const RegionSpec& v,
                         int subspace_dim, int witnesses) {
  double lf = ucp_quadratic_min(s_frac, g, v, subspace_dim, witnesses).lambda_min;
  double li = ucp_quadratic_min(s_int, g, v, subspace_dim, witnesses).lambda_min;
  return lf / std::max(li, 1e-16);
}

std::vector<UcpTrendRow> ucp_refinement_trend(double s, int n, const std::vector<int>& grid_sizes,
                                              const std::vector<int>& subspace_dims, double L,
                                              const RegionSpec& v, int witnesses) {
  require(grid_sizes.size() == subspace_dims.size() && !grid_sizes.empty(), Errc::BadConfig,
          "need one subspace dimension per grid size");
  std::vector<UcpTrendRow> rows;
  rows.reserve(grid_sizes.size());
  for (std::size_t i = 0; i < grid_sizes.size(); ++i) {
    Grid g = Grid::make(n, grid_sizes[i], L);
    UcpSpectrumResult r = ucp_quadratic_min(s, g, v, subspace_dims[i], witnesses);
    rows.push_back({s, g.N, subspace_dims[i], region_indices(g, v).size(), r.lambda_min});
  }
  return rows;
}

}  // namespace fraclab
