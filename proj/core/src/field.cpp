#include "fraclab/field.hpp"

#include <cmath>

namespace fraclab {

void check_same_grid(const Field& u, const Field& v) {
  require(u.grid == v.grid, Errc::GridMismatch, "fields live on different grids");
}

double l2_inner(const Field& u, const Field& v) {
  check_same_grid(u, v);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  double hn = std::pow(u.grid.h, u.grid.n);
  return hn * s;
}

double l2_norm(const Field& u) { return std::sqrt(l2_inner(u, u)); }

double mean(const Field& u) {
  double s = 0.0;
  for (double x : u.values) s += x;
  return s / double(u.size());
}

Field operator+(const Field& u, const Field& v) {
  check_same_grid(u, v);
  Field w(u.grid);
  for (std::size_t i = 0; i < u.size(); ++i) w[i] = u[i] + v[i];
  return w;
}

Field operator-(const Field& u, const Field& v) {
  check_same_grid(u, v);
  Field w(u.grid);
  for (std::size_t i = 0; i < u.size(); ++i) w[i] = u[i] - v[i];
  return w;
}

Field operator*(double a, const Field& u) {
  Field w(u.grid);
  for (std::size_t i = 0; i < u.size(); ++i) w[i] = a * u[i];
  return w;
}

Field pointwise(const Field& u, const Field& v) {
  check_same_grid(u, v);
  Field w(u.grid);
  for (std::size_t i = 0; i < u.size(); ++i) w[i] = u[i] * v[i];
  return w;
}

void axpy(double a, const Field& x, Field& y) {
  check_same_grid(x, y);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

Field make_bump(const Grid& g, const Point& center, double radius, double amplitude) {
  require(radius > 0.0, Errc::BumpOutsideBox, "bump radius must be positive");
  for (int a = 0; a < g.n; ++a) {
    double c = center[std::size_t(a)];
    require(c - radius >= -g.L + 2.0 * g.h && c + radius <= g.L - 2.0 * g.h,
            Errc::BumpOutsideBox, "bump ball must fit in the box with margin >= 2h");
  }
  Field u(g);
  if (amplitude == 0.0) return u;
  for (std::size_t i = 0; i < u.size(); ++i) {
    Point x = g.point(i);
    double r2 = 0.0;
    for (int a = 0; a < g.n; ++a) {
      double d = x[std::size_t(a)] - center[std::size_t(a)];
      r2 += d * d;
    }
    double t2 = r2 / (radius * radius);
    if (t2 < 1.0) u[i] = amplitude * std::exp(1.0 - 1.0 / (1.0 - t2));
  }
  return u;
}

namespace {
// C^inf monotone step: 0 at t<=0, 1 at t>=1.
double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  double a = std::exp(-1.0 / t);
  double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}
}  // namespace

Field make_cutoff(const Grid& g, const Point& center, double r_inner, double r_outer) {
  require(0.0 < r_inner && r_inner < r_outer, Errc::BadConfig, "need 0 < r_inner < r_outer");
  for (int a = 0; a < g.n; ++a) {
    double c = center[std::size_t(a)];
    require(c - r_outer >= -g.L + 2.0 * g.h && c + r_outer <= g.L - 2.0 * g.h,
            Errc::BumpOutsideBox, "cutoff ball must fit in the box with margin >= 2h");
  }
  Field u(g);
  for (std::size_t i = 0; i < u.size(); ++i) {
    Point x = g.point(i);
    double r2 = 0.0;
    for (int a = 0; a < g.n; ++a) {
      double d = x[std::size_t(a)] - center[std::size_t(a)];
      r2 += d * d;
    }
    double r = std::sqrt(r2);
    u[i] = smooth_step((r_outer - r) / (r_outer - r_inner));
  }
  return u;
}

Field make_cos_mode(const Grid& g, const std::array<int, 3>& k) {
  Field u(g);
  for (std::size_t i = 0; i < u.size(); ++i) {
    Point x = g.point(i);
    double phase = 0.0;
    for (int a = 0; a < g.n; ++a) phase += M_PI * k[std::size_t(a)] * x[std::size_t(a)] / g.L;
    u[i] = std::cos(phase);
  }
  return u;
}

Field make_sin_mode(const Grid& g, const std::array<int, 3>& k) {
  Field u(g);
  for (std::size_t i = 0; i < u.size(); ++i) {
    Point x = g.point(i);
    double phase = 0.0;
    for (int a = 0; a < g.n; ++a) phase += M_PI * k[std::size_t(a)] * x[std::size_t(a)] / g.L;
    u[i] = std::sin(phase);
  }
  return u;
}

Field make_gaussian(const Grid& g, const Point& center, double sigma) {
  require(sigma > 0.0, Errc::BadConfig, "sigma must be positive");
  Field u(g);
  for (std::size_t i = 0; i < u.size(); ++i) {
    Point x = g.point(i);
    double r2 = 0.0;
    for (int a = 0; a < g.n; ++a) {
      double d = x[std::size_t(a)] - center[std::size_t(a)];
      r2 += d * d;
    }
    u[i] = std::exp(-r2 / (2.0 * sigma * sigma));
  }
  return u;
}

Field random_bump_superposition(const Grid& g, const Point& K_center, double K_radius,
                                int max_bumps, std::uint64_t seed) {
  Rng rng(seed);
  int count = 1 + int(rng.below(std::uint64_t(max_bumps)));
  Field u(g);
  for (int b = 0; b < count; ++b) {
    // radius first so the center range is well defined
    double rho = K_radius * rng.uniform(0.15, 0.45);
    Point c{0.0, 0.0, 0.0};
    for (int a = 0; a < g.n; ++a)
      c[std::size_t(a)] = K_center[std::size_t(a)] + rng.uniform(-1.0, 1.0) * (K_radius - rho);
    double amp = rng.uniform(-1.0, 1.0);
    if (std::abs(amp) < 0.1) amp = amp < 0 ? -0.1 : 0.1;
    axpy(1.0, make_bump(g, c, rho, amp), u);
  }
  double nrm = l2_norm(u);
  if (nrm == 0.0) return random_bump_superposition(g, K_center, K_radius, max_bumps, seed + 1);
  return (1.0 / nrm) * u;
}

Field remove_mean_with_bump(const Field& u, const Point& center, double radius) {
  Field b = make_bump(u.grid, center, radius, 1.0);
  double su = 0.0, sb = 0.0;
  for (double x : u.values) su += x;
  for (double x : b.values) sb += x;
  require(sb != 0.0, Errc::ZeroField, "reference bump has zero mass");
  Field out = u;
  axpy(-su / sb, b, out);
  return out;
}

Field random_band_limited(const Grid& g, int kmax, std::uint64_t seed) {
  Rng rng(seed);
  Field u(g);
  std::array<int, 3> k{0, 0, 0};
  auto add_modes = [&](auto&& self, int axis) -> void {
    if (axis == g.n) {
      double k2 = 0.0;
      for (int a = 0; a < g.n; ++a) k2 += double(k[std::size_t(a)]) * k[std::size_t(a)];
      if (k2 > double(kmax) * kmax) return;
      double ac = rng.normal(), as = rng.normal();
      axpy(ac, make_cos_mode(g, k), u);
      if (k2 > 0.0) axpy(as, make_sin_mode(g, k), u);
      return;
    }
    for (int m = 0; m <= kmax; ++m) {
      k[std::size_t(axis)] = m;
      self(self, axis + 1);
    }
  };
  add_modes(add_modes, 0);
  double nrm = l2_norm(u);
  if (nrm == 0.0) return u;
  return (1.0 / nrm) * u;
}

}  // namespace fraclab
