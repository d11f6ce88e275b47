#include "fraclab/dplane.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>
#include <utility>

#include "fraclab/spectral.hpp"

namespace fraclab {

namespace {

Point ball_center() { return {0.0, 0.0, 0.0}; }

double dot3(const Point& a, const Point& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

Point cross3(const Point& a, const Point& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Point unit(const Point& a) {
  double n = std::sqrt(dot3(a, a));
  return {a[0] / n, a[1] / n, a[2] / n};
}

// (direction, transverse offset indices) of a flat plane slot; the inverse
// of Sinogram::index.
struct PlaneRef {
  std::size_t m;
  std::array<int, 2> off;
};

PlaneRef plane_ref(const PlaneGeometry& geom, std::size_t pl) {
  PlaneRef r{0, {0, 0}};
  const std::size_t P = std::size_t(geom.P);
  if (geom.codim() == 1) {
    r.m = pl / P;
    r.off[0] = int(pl % P);
  } else {
    r.off[1] = int(pl % P);
    pl /= P;
    r.off[0] = int(pl % P);
    r.m = pl / P;
  }
  return r;
}

// Walks the midpoint samples of one plane -- step h/2 along each in-plane
// axis across the ball's full extent -- and hands every interpolation
// corner to the sink as (flat index, quadrature x corner weight). Forward
// and adjoint share this walk, which is what makes them exact transposes.
template <class Sink>
void plane_samples(const PlaneGeometry& geom, const PlaneRef& ref, Sink&& sink) {
  const Grid& g = geom.grid;
  const int n = g.n;
  const int cdim = geom.codim();
  const double step = 0.5 * g.h;
  const int count = g.N;  // 2R / step exactly
  const double R = geom.ball_radius();
  Point base{0.0, 0.0, 0.0};
  for (int a = 0; a < cdim; ++a) {
    double p = geom.offset(ref.off[std::size_t(a)]);
    const Point& t = geom.frame[ref.m][std::size_t(a)];
    for (int k = 0; k < n; ++k) base[std::size_t(k)] += p * t[std::size_t(k)];
  }
  const double wq = geom.d == 1 ? step : step * step;

  auto emit = [&](const Point& x) {
    int j[3] = {0, 0, 0};
    double fr[3] = {0.0, 0.0, 0.0};
    for (int a = 0; a < n; ++a) {
      double u = (x[std::size_t(a)] + g.L) / g.h;
      double fl = std::floor(u);
      fr[a] = u - fl;
      j[a] = (int(fl) % g.N + g.N) % g.N;
    }
    if (n == 2) {
      std::size_t N = std::size_t(g.N);
      std::size_t j0 = std::size_t(j[0]), j1 = std::size_t(j[1]);
      std::size_t k0 = j0 + 1 == N ? 0 : j0 + 1, k1 = j1 + 1 == N ? 0 : j1 + 1;
      double f0 = fr[0], f1 = fr[1];
      sink(j0 * N + j1, wq * (1.0 - f0) * (1.0 - f1));
      sink(j0 * N + k1, wq * (1.0 - f0) * f1);
      sink(k0 * N + j1, wq * f0 * (1.0 - f1));
      sink(k0 * N + k1, wq * f0 * f1);
    } else {
      std::size_t N = std::size_t(g.N);
      std::size_t j0 = std::size_t(j[0]), j1 = std::size_t(j[1]), j2 = std::size_t(j[2]);
      std::size_t k0 = j0 + 1 == N ? 0 : j0 + 1;
      std::size_t k1 = j1 + 1 == N ? 0 : j1 + 1;
      std::size_t k2 = j2 + 1 == N ? 0 : j2 + 1;
      double f0 = fr[0], f1 = fr[1], f2 = fr[2];
      sink((j0 * N + j1) * N + j2, wq * (1.0 - f0) * (1.0 - f1) * (1.0 - f2));
      sink((j0 * N + j1) * N + k2, wq * (1.0 - f0) * (1.0 - f1) * f2);
      sink((j0 * N + k1) * N + j2, wq * (1.0 - f0) * f1 * (1.0 - f2));
      sink((j0 * N + k1) * N + k2, wq * (1.0 - f0) * f1 * f2);
      sink((k0 * N + j1) * N + j2, wq * f0 * (1.0 - f1) * (1.0 - f2));
      sink((k0 * N + j1) * N + k2, wq * f0 * (1.0 - f1) * f2);
      sink((k0 * N + k1) * N + j2, wq * f0 * f1 * (1.0 - f2));
      sink((k0 * N + k1) * N + k2, wq * f0 * f1 * f2);
    }
  };

  const Point& s0 = geom.frame[ref.m][std::size_t(cdim)];
  if (geom.d == 1) {
    for (int t = 0; t < count; ++t) {
      double tt = -R + (t + 0.5) * step;
      emit(Point{base[0] + tt * s0[0], base[1] + tt * s0[1], base[2] + tt * s0[2]});
    }
  } else {
    const Point& s1 = geom.frame[ref.m][std::size_t(cdim + 1)];
    for (int t0 = 0; t0 < count; ++t0) {
      double a0 = -R + (t0 + 0.5) * step;
      Point row{base[0] + a0 * s0[0], base[1] + a0 * s0[1], base[2] + a0 * s0[2]};
      for (int t1 = 0; t1 < count; ++t1) {
        double a1 = -R + (t1 + 0.5) * step;
        emit(Point{row[0] + a1 * s1[0], row[1] + a1 * s1[1], row[2] + a1 * s1[2]});
      }
    }
  }
}

void check_in_ball(const Field& f, const PlaneGeometry& geom) {
  require(is_supported_in(f, RegionSpec::ball(ball_center(), geom.ball_radius())),
          Errc::SupportOutsideBall, "field must be supported in the ball |x| < L/2");
}

std::map<std::tuple<int, int, int, double, std::size_t>, double>& constant_cache() {
  static auto* cache = new std::map<std::tuple<int, int, int, double, std::size_t>, double>();
  return *cache;
}

std::map<std::pair<int, double>, double>& roi_scale_cache() {
  static auto* cache = new std::map<std::pair<int, double>, double>();
  return *cache;
}

std::mutex fit_mutex;

std::tuple<int, int, int, double, std::size_t> family_key(const PlaneGeometry& geom) {
  return {geom.grid.n, geom.d, geom.grid.N, geom.grid.L, geom.dir.size()};
}

// Fits the cached normal constant on the default phantoms when nothing has
// been fitted for this family shape yet.
double fitted_constant(const PlaneGeometry& geom) {
  {
    std::lock_guard<std::mutex> lock(fit_mutex);
    auto it = constant_cache().find(family_key(geom));
    if (it != constant_cache().end()) return it->second;
  }
  return fit_normal_constant(geom, default_phantom_set(geom.grid)).c_fit;
}

// Inversion scale for the even-d stencil recovery, fitted per grid on a
// held-out calibration phantom with a fixed internal plane family so the
// kernel normalization and the stencil's constant are absorbed together.
// Calibration runs through the smooth convolution realization of the normal
// operator: the raw backprojection carries grid-locked quadrature ripple that
// a second difference amplifies by 1/h^2, which would bias the least-squares
// scale toward zero. The mutex is not held across the fit because the
// convolution backend may itself need to fit its constant.
double roi_scale(const Grid& g) {
  auto key = std::make_pair(g.N, g.L);
  {
    std::lock_guard<std::mutex> lock(fit_mutex);
    auto it = roi_scale_cache().find(key);
    if (it != roi_scale_cache().end()) return it->second;
  }
  PlaneGeometry geom = PlaneGeometry::make(g, 2, 96);
  Field fcal = dplane_phantom(g, "bell", 1);
  Field lap = stencil_laplacian(normal_operator(fcal, geom, NormalBackend::convolution), 1);
  auto ball = region_indices(g, RegionSpec::ball(ball_center(), geom.ball_radius()));
  double num = 0.0, den = 0.0;
  for (std::size_t i : ball) {
    num += lap[i] * fcal[i];
    den += lap[i] * lap[i];
  }
  double scale = num / den;
  std::lock_guard<std::mutex> lock(fit_mutex);
  return roi_scale_cache().emplace(key, scale).first->second;
}

std::uint64_t name_tag(const std::string& name) {
  std::uint64_t t = 1469598103934665603ull;
  for (char c : name) {
    t ^= std::uint64_t((unsigned char)(c));
    t *= 1099511628211ull;
  }
  return t;
}

}  // namespace

PlaneGeometry PlaneGeometry::make(const Grid& g, int d, int directions) {
  require(g.n == 2 || g.n == 3, Errc::UnsupportedConfig, "plane families need n = 2 or 3");
  require(d == 1 || d == g.n - 1, Errc::UnsupportedConfig, "plane dimension must be 1 or n-1");
  require(directions >= 1, Errc::BadConfig, "need at least one direction");
  PlaneGeometry geom;
  geom.grid = g;
  geom.d = d;
  const int M = directions;
  geom.dir.resize(std::size_t(M));
  geom.frame.resize(std::size_t(M));
  if (g.n == 2) {
    for (int m = 0; m < M; ++m) {
      double th = M_PI * (m + 0.5) / M;
      Point w{std::cos(th), std::sin(th), 0.0};
      Point t{-std::sin(th), std::cos(th), 0.0};
      geom.dir[std::size_t(m)] = w;
      geom.frame[std::size_t(m)] = {w, t, Point{0.0, 0.0, 1.0}};
    }
  } else {
    // Fibonacci hemisphere: quasi-uniform, one point per antipodal class
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int m = 0; m < M; ++m) {
      double z = (m + 0.5) / M;
      double r = std::sqrt(1.0 - z * z);
      double ph = golden * m;
      Point w{r * std::cos(ph), r * std::sin(ph), z};
      Point helper = std::abs(w[2]) < 0.9 ? Point{0.0, 0.0, 1.0} : Point{1.0, 0.0, 0.0};
      Point e1 = unit(cross3(helper, w));
      Point e2 = cross3(w, e1);
      geom.dir[std::size_t(m)] = w;
      if (d == 2)
        geom.frame[std::size_t(m)] = {w, e1, e2};
      else
        geom.frame[std::size_t(m)] = {e1, e2, w};
    }
  }
  // offsets at multiples of h covering [-L/2, L/2]; R/h = N/4 exactly
  int half = g.N / 4;
  geom.P = 2 * half + 1;
  geom.p0 = -double(half) * g.h;
  return geom;
}

std::size_t PlaneGeometry::offsets_per_direction() const {
  std::size_t per = 1;
  for (int a = 0; a < codim(); ++a) per *= std::size_t(P);
  return per;
}

std::size_t PlaneGeometry::plane_count() const { return offsets_per_direction() * dir.size(); }

bool PlaneGeometry::same_shape(const PlaneGeometry& o) const {
  return grid == o.grid && d == o.d && dir.size() == o.dir.size() && P == o.P && p0 == o.p0;
}

Sinogram::Sinogram(PlaneGeometry geometry)
    : geom(std::move(geometry)), values(geom.plane_count(), 0.0) {}

std::size_t Sinogram::index(std::size_t direction, int i0, int i1) const {
  std::size_t at = direction * std::size_t(geom.P) + std::size_t(i0);
  if (geom.codim() == 2) at = at * std::size_t(geom.P) + std::size_t(i1);
  return at;
}

double Sinogram::measure_weight() const {
  double w = 1.0 / double(geom.direction_count());
  for (int a = 0; a < geom.codim(); ++a) w *= geom.grid.h;
  return w;
}

double sinogram_inner(const Sinogram& a, const Sinogram& b) {
  require(a.geom.same_shape(b.geom), Errc::ShapeMismatch, "sinogram families differ");
  require(a.values.size() == b.values.size(), Errc::ShapeMismatch, "sinogram sizes differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) acc += a.values[i] * b.values[i];
  return a.measure_weight() * acc;
}

double sinogram_norm(const Sinogram& a) { return std::sqrt(sinogram_inner(a, a)); }

Sinogram forward_dplane(const Field& f, const PlaneGeometry& geom) {
  require(f.grid == geom.grid, Errc::GridMismatch, "field grid does not match the plane family");
  check_in_ball(f, geom);
  Sinogram s(geom);
  const std::size_t np = geom.plane_count();
  for (std::size_t pl = 0; pl < np; ++pl) {
    PlaneRef ref = plane_ref(geom, pl);
    double acc = 0.0;
    plane_samples(geom, ref, [&](std::size_t at, double w) { acc += w * f[at]; });
    s.values[pl] = acc;
  }
  return s;
}

Field adjoint_dplane(const Sinogram& sino) {
  const PlaneGeometry& geom = sino.geom;
  require(sino.values.size() == geom.plane_count(), Errc::ShapeMismatch,
          "sinogram shape does not match its geometry");
  Field out(geom.grid);
  const double scale = sino.measure_weight() / std::pow(geom.grid.h, geom.grid.n);
  const std::size_t np = geom.plane_count();
  for (std::size_t pl = 0; pl < np; ++pl) {
    double gv = sino.values[pl] * scale;
    if (gv == 0.0) continue;
    PlaneRef ref = plane_ref(geom, pl);
    plane_samples(geom, ref, [&](std::size_t at, double w) { out[at] += w * gv; });
  }
  return out;
}

Field normal_operator(const Field& f, const PlaneGeometry& geom, NormalBackend backend) {
  require(f.grid == geom.grid, Errc::GridMismatch, "field grid does not match the plane family");
  if (backend == NormalBackend::composition) return adjoint_dplane(forward_dplane(f, geom));
  check_in_ball(f, geom);
  double c = fitted_constant(geom);
  double alpha = double(geom.grid.n - geom.d);
  if (backend == NormalBackend::convolution)
    return c * riesz_potential(f, alpha, RieszBackend::direct);
  return c * riesz_potential(f, alpha, RieszBackend::spectral, true);
}

NormalFit fit_normal_constant(const PlaneGeometry& geom, const std::vector<Field>& phantoms) {
  const Grid& g = geom.grid;
  require(phantoms.size() >= 5, Errc::DegeneratePhantoms, "need at least five phantoms");
  std::vector<double> norms;
  for (const Field& f : phantoms) {
    require(f.grid == g, Errc::GridMismatch, "phantom grid does not match the plane family");
    norms.push_back(l2_norm(f));
    require(norms.back() > 0.0, Errc::DegeneratePhantoms, "zero phantom");
  }
  for (std::size_t i = 0; i < phantoms.size(); ++i)
    for (std::size_t j = i + 1; j < phantoms.size(); ++j)
      require(l2_norm(phantoms[i] - phantoms[j]) > 1e-9 * (norms[i] + norms[j]),
              Errc::DegeneratePhantoms, "phantoms coincide");
  auto ball = region_indices(g, RegionSpec::ball(ball_center(), geom.ball_radius()));
  const double alpha = double(g.n - geom.d);
  double num = 0.0, den = 0.0;
  std::vector<double> per;
  for (const Field& f : phantoms) {
    Field u = adjoint_dplane(forward_dplane(f, geom));
    Field v = riesz_potential(f, alpha, RieszBackend::direct);
    // the convolution identity holds where the family is complete: the ball
    double nb = 0.0, db = 0.0;
    for (std::size_t i : ball) {
      nb += u[i] * v[i];
      db += v[i] * v[i];
    }
    require(db > 0.0, Errc::DegeneratePhantoms, "phantom with vanishing normal image");
    per.push_back(nb / db);
    num += nb;
    den += db;
  }
  NormalFit out{num / den, 0.0};
  for (double c : per) out.spread = std::max(out.spread, std::abs(c - out.c_fit) / out.c_fit);
  {
    std::lock_guard<std::mutex> lock(fit_mutex);
    constant_cache()[family_key(geom)] = out.c_fit;
  }
  return out;
}

Field roi_invert_even_d(const Field& ndf, const RegionSpec& v, int d) {
  const Grid& g = ndf.grid;
  require(g.n == 3 && d == 2, Errc::UnsupportedConfig,
          "local inversion is built for 2-planes in three dimensions");
  auto vin = region_indices(g, v);
  require(!vin.empty(), Errc::BadConfig, "region holds no grid points");
  for (std::size_t i : vin) {
    auto idx = g.unflatten(i);
    for (int a = 0; a < g.n; ++a)
      require(idx[std::size_t(a)] >= 3 && idx[std::size_t(a)] <= g.N - 4, Errc::MarginTooSmall,
              "region needs three cells of margin inside the box");
  }
  double scale = roi_scale(g);
  Field lap = stencil_laplacian(ndf, 1);
  Field out(g);
  for (std::size_t i : vin) out[i] = scale * lap[i];
  return out;
}

std::vector<std::uint8_t> planes_meeting(const PlaneGeometry& geom, const RegionSpec& v) {
  std::vector<std::uint8_t> out(geom.plane_count(), 0);
  for (std::size_t pl = 0; pl < out.size(); ++pl) {
    PlaneRef ref = plane_ref(geom, pl);
    bool hit = true;
    if (v.shape == RegionSpec::Shape::ball) {
      // transverse distance from the ball center to the plane
      double d2 = 0.0;
      for (int a = 0; a < geom.codim(); ++a) {
        double q = dot3(v.center, geom.frame[ref.m][std::size_t(a)]) -
                   geom.offset(ref.off[std::size_t(a)]);
        d2 += q * q;
      }
      hit = d2 <= v.radius * v.radius;
    } else {
      for (int a = 0; a < geom.codim() && hit; ++a) {
        const Point& t = geom.frame[ref.m][std::size_t(a)];
        double p = geom.offset(ref.off[std::size_t(a)]);
        double mn = 0.0, mx = 0.0;
        for (int k = 0; k < geom.grid.n; ++k) {
          double lo = v.lo[std::size_t(k)] * t[std::size_t(k)];
          double hi = v.hi[std::size_t(k)] * t[std::size_t(k)];
          mn += std::min(lo, hi);
          mx += std::max(lo, hi);
        }
        hit = p >= mn && p <= mx;
      }
    }
    out[pl] = hit ? 1 : 0;
  }
  return out;
}

PartialData partial_data_residual(const Field& f, const RegionSpec& v,
                                  const PlaneGeometry& geom) {
  Sinogram s = forward_dplane(f, geom);
  std::vector<std::uint8_t> meet = planes_meeting(geom, v);
  PartialData out{0.0, 0.0};
  for (std::size_t pl = 0; pl < meet.size(); ++pl)
    if (meet[pl]) out.plane_sup = std::max(out.plane_sup, std::abs(s.values[pl]));
  double acc = 0.0;
  for (std::size_t i : region_indices(f.grid, v)) acc += f[i] * f[i];
  out.v_norm = std::sqrt(std::pow(f.grid.h, f.grid.n) * acc);
  return out;
}

Field dplane_phantom(const Grid& g, const std::string& name, std::uint64_t seed) {
  require(g.n >= 2, Errc::UnsupportedConfig, "phantoms are planar or spatial");
  Rng rng(seed ^ name_tag(name));
  const double L = g.L;
  auto jit = [&](double amp) { return amp * L * rng.uniform(-1.0, 1.0); };
  auto at = [&](double x0, double x1, double x2) {
    Point c{x0 * L, x1 * L, 0.0};
    if (g.n > 2) c[2] = x2 * L;
    return c;
  };
  if (name == "bell") {
    Point c{jit(0.03), jit(0.03), 0.0};
    if (g.n > 2) c[2] = jit(0.03);
    return make_bump(g, c, (0.28 + 0.04 * rng.uniform()) * L, 1.0);
  }
  if (name == "blobs") {
    Field u(g);
    for (int b = 0; b < 3; ++b) {
      double rho = (0.15 + 0.07 * rng.uniform()) * L;
      Point c{0.0, 0.0, 0.0};
      for (int a = 0; a < g.n; ++a) c[std::size_t(a)] = rng.uniform(-1.0, 1.0) * (0.42 * L - rho);
      double amp = rng.uniform(0.4, 1.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
      axpy(amp, make_bump(g, c, rho, 1.0), u);
    }
    return u;
  }
  if (name == "shell") {
    Point c{jit(0.015), jit(0.015), 0.0};
    if (g.n > 2) c[2] = jit(0.015);
    double d1 = jit(0.01), d2 = jit(0.01);
    Field outer = make_cutoff(g, c, (0.24 + d1 / L) * L, (0.36 + d2 / L) * L);
    Field inner = make_cutoff(g, c, (0.10 - d1 / L) * L, (0.22 + d1 / L) * L);
    return outer - inner;
  }
  if (name == "tilt") {
    Point c{jit(0.02), jit(0.02), 0.0};
    if (g.n > 2) c[2] = jit(0.02);
    Field b = make_bump(g, c, 0.32 * L, 1.0);
    double ang = 2.0 * M_PI * rng.uniform();
    Point a{std::cos(ang), std::sin(ang), 0.0};
    if (g.n > 2) {
      a[2] = rng.uniform(-0.5, 0.5);
      a = unit(a);
    }
    for (std::size_t i = 0; i < b.size(); ++i) b[i] *= dot3(a, g.point(i)) / L;
    return b;
  }
  if (name == "twin") {
    Point c{(0.18 + jit(0.02) / L) * L, jit(0.08), 0.0};
    if (g.n > 2) c[2] = jit(0.08);
    Point c2{-c[0] + jit(0.02), -c[1] + jit(0.02), 0.0};
    if (g.n > 2) c2[2] = -c[2] + jit(0.02);
    double r1 = (0.13 + 0.04 * rng.uniform()) * L;
    double r2 = (0.13 + 0.04 * rng.uniform()) * L;
    return make_bump(g, c, r1, 1.0) - make_bump(g, c2, r2, 1.0);
  }
  if (name == "roi") {
    // main blob rides the default region of interest, two satellites around
    Field u(g);
    Point c1 = at(0.05, -0.04, 0.03);
    c1[0] += jit(0.01);
    c1[1] += jit(0.01);
    axpy(1.0, make_bump(g, c1, 0.19 * L, 1.0), u);
    axpy(0.6, make_bump(g, at(-0.18, 0.12, -0.08), 0.17 * L, 1.0), u);
    axpy(-0.5, make_bump(g, at(0.12, 0.16, 0.04), (0.15 + 0.02 * rng.uniform()) * L, 1.0), u);
    return u;
  }
  fail(Errc::NotFound, "unknown phantom name: " + name);
}

std::vector<Field> default_phantom_set(const Grid& g) {
  std::vector<Field> set;
  std::uint64_t seed = 1;
  for (const char* name : {"bell", "blobs", "shell", "tilt", "twin"})
    set.push_back(dplane_phantom(g, name, seed++));
  return set;
}

}  // namespace fraclab
