#include "fraclab/domain_mask.hpp"

#include <algorithm>
#include <cmath>

#include "fraclab/errors.hpp"

namespace fraclab {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

RegionSpec RegionSpec::ball(std::array<double, 3> center, double radius) {
  require(radius > 0.0, Errc::BadConfig, "ball radius must be positive");
  RegionSpec r;
  r.shape = Shape::ball;
  r.center = center;
  r.radius = radius;
  return r;
}

RegionSpec RegionSpec::box(std::array<double, 3> lo, std::array<double, 3> hi) {
  RegionSpec r;
  r.shape = Shape::box;
  r.lo = lo;
  r.hi = hi;
  return r;
}

bool RegionSpec::contains(const std::array<double, 3>& x, int n) const {
  if (shape == Shape::ball) {
    double d2 = 0.0;
    for (int a = 0; a < n; ++a) {
      double d = x[std::size_t(a)] - center[std::size_t(a)];
      d2 += d * d;
    }
    return d2 < radius * radius;
  }
  for (int a = 0; a < n; ++a) {
    if (!(lo[std::size_t(a)] < x[std::size_t(a)] &&
          x[std::size_t(a)] < hi[std::size_t(a)]))
      return false;
  }
  return true;
}

double RegionSpec::volume(int n) const {
  if (shape == Shape::ball) return unit_ball_volume(n) * std::pow(radius, n);
  double v = 1.0;
  for (int a = 0; a < n; ++a) {
    double w = hi[std::size_t(a)] - lo[std::size_t(a)];
    require(w > 0.0, Errc::BadConfig, "box extent must be positive");
    v *= w;
  }
  return v;
}

double RegionSpec::inscribed_radius(int n) const {
  if (shape == Shape::ball) return radius;
  double r = 0.0;
  for (int a = 0; a < n; ++a) {
    double half = 0.5 * (hi[std::size_t(a)] - lo[std::size_t(a)]);
    r = (a == 0) ? half : std::min(r, half);
  }
  return r;
}

std::array<double, 3> RegionSpec::inscribed_center(int n) const {
  if (shape == Shape::ball) return center;
  std::array<double, 3> c{0.0, 0.0, 0.0};
  for (int a = 0; a < n; ++a)
    c[std::size_t(a)] = 0.5 * (lo[std::size_t(a)] + hi[std::size_t(a)]);
  return c;
}

double unit_ball_volume(int n) {
  switch (n) {
    case 1: return 2.0;
    case 2: return kPi;
    case 3: return 4.0 / 3.0 * kPi;
    default: fail(Errc::BadConfig, "dimension must be 1, 2 or 3");
  }
}

std::vector<std::size_t> region_indices(const Grid& g, const RegionSpec& r) {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < g.size(); ++f)
    if (r.contains(g.point(f), g.n)) out.push_back(f);
  return out;
}

bool is_supported_on(const Field& u, const std::vector<std::size_t>& inside) {
  double amp = 0.0;
  for (double x : u.values) amp = std::max(amp, std::abs(x));
  double tol = 1e-14 * amp;
  std::vector<char> in(u.size(), 0);
  for (std::size_t f : inside) in[f] = 1;
  for (std::size_t f = 0; f < u.size(); ++f)
    if (!in[f] && std::abs(u[f]) > tol) return false;
  return true;
}

bool is_supported_in(const Field& u, const RegionSpec& r) {
  return is_supported_on(u, region_indices(u.grid, r));
}

Field masked(const Field& u, const std::vector<std::size_t>& inside) {
  Field out(u.grid);
  for (std::size_t f : inside) out[f] = u[f];
  return out;
}

namespace {

// Marks every cell within Chebyshev distance `rad` of a marked cell
// (separable per-axis dilation; wraps across the seam, which is the honest
// metric on the torus even though padded sets never reach it).
std::vector<char> dilate_chebyshev(const Grid& g, const std::vector<char>& in,
                                   int rad) {
  std::vector<char> cur = in, next(in.size(), 0);
  for (int a = 0; a < g.n; ++a) {
    std::fill(next.begin(), next.end(), 0);
    for (std::size_t f = 0; f < cur.size(); ++f) {
      if (!cur[f]) continue;
      auto c = g.unflatten(f);
      for (int d = -rad; d <= rad; ++d) {
        auto cc = c;
        int v = (int(c[std::size_t(a)]) + d) % g.N;
        if (v < 0) v += g.N;
        cc[std::size_t(a)] = std::size_t(v);
        next[g.flatten(cc)] = 1;
      }
    }
    cur.swap(next);
  }
  return cur;
}

void check_padding(const Grid& g, const std::vector<std::size_t>& idx,
                   const char* name) {
  for (std::size_t f : idx) {
    auto x = g.point(f);
    for (int a = 0; a < g.n; ++a)
      require(std::abs(x[std::size_t(a)]) <= 0.5 * g.L + 1e-12, Errc::BadConfig,
              std::string(name) + " breaches the half-box padding margin");
  }
}

void check_separation(const Grid& g, const std::vector<std::size_t>& a,
                      const std::vector<std::size_t>& b, const char* what) {
  std::vector<char> occ(g.size(), 0);
  for (std::size_t f : a) occ[f] = 1;
  // one-cell dilation: any hit within it means Chebyshev distance < 2
  std::vector<char> halo = dilate_chebyshev(g, occ, 1);
  for (std::size_t f : b)
    require(!halo[f], Errc::BadConfig,
            std::string(what) + " are closer than two grid cells");
}

}  // namespace

std::vector<std::size_t> halo_indices(const Grid& g,
                                      const std::vector<std::size_t>& inside,
                                      int rad) {
  std::vector<char> occ(g.size(), 0);
  for (std::size_t f : inside) occ[f] = 1;
  std::vector<char> fat = dilate_chebyshev(g, occ, rad);
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < fat.size(); ++f)
    if (fat[f]) out.push_back(f);
  return out;
}

DomainMask DomainMask::make(const Grid& g, const RegionSpec& omega_r,
                            const RegionSpec& w1_r, const RegionSpec& w2_r,
                            const std::optional<RegionSpec>& v_r) {
  DomainMask m{g, region_indices(g, omega_r), region_indices(g, w1_r),
               region_indices(g, w2_r), {}};
  require(!m.omega.empty(), Errc::BadConfig, "omega contains no grid points");
  require(!m.w1.empty(), Errc::BadConfig, "w1 contains no grid points");
  require(!m.w2.empty(), Errc::BadConfig, "w2 contains no grid points");
  if (v_r) {
    m.v = region_indices(g, *v_r);
    require(!m.v.empty(), Errc::BadConfig, "roi contains no grid points");
  }
  check_padding(g, m.omega, "omega");
  check_padding(g, m.w1, "w1");
  check_padding(g, m.w2, "w2");
  check_padding(g, m.v, "roi");
  check_separation(g, m.omega, m.w1, "omega and w1");
  check_separation(g, m.omega, m.w2, "omega and w2");
  check_separation(g, m.w1, m.w2, "w1 and w2");
  return m;
}

}  // namespace fraclab
