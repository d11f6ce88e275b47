#include "fraclab/poincare.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>

#include "json.hpp"

#include "fraclab/errors.hpp"
#include "fraclab/rng.hpp"
#include "fraclab/spectral.hpp"

namespace fraclab {

const char* constant_kind_name(ConstantKind k) {
  switch (k) {
    case ConstantKind::freq_split: return "freq_split";
    case ConstantKind::simple: return "simple";
    case ConstantKind::interp: return "interp";
  }
  return "?";
}

namespace {

// y = A x with A the second-difference Dirichlet Laplacian on the masked
// points (value zero off the mask).
void apply_masked_laplacian(const Grid& g, const std::vector<std::size_t>& idx,
                            const std::vector<std::int32_t>& local,
                            const std::vector<double>& x,
                            std::vector<double>& y) {
  double inv_h2 = 1.0 / (g.h * g.h);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto c = g.unflatten(idx[i]);
    double acc = 2.0 * double(g.n) * x[i];
    for (int a = 0; a < g.n; ++a) {
      for (int d : {-1, 1}) {
        auto cc = c;
        int v = (int(c[std::size_t(a)]) + d) % g.N;
        if (v < 0) v += g.N;
        cc[std::size_t(a)] = std::size_t(v);
        std::int32_t nb = local[g.flatten(cc)];
        if (nb >= 0) acc -= x[std::size_t(nb)];
      }
    }
    y[i] = acc * inv_h2;
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Conjugate gradient for the SPD masked Laplacian.
void cg_solve(const Grid& g, const std::vector<std::size_t>& idx,
              const std::vector<std::int32_t>& local,
              const std::vector<double>& b, std::vector<double>& x) {
  std::size_t m = b.size();
  std::fill(x.begin(), x.end(), 0.0);
  std::vector<double> r = b, p = b, ap(m);
  double rr = dot(r, r);
  double tol2 = 1e-26 * rr;
  std::size_t max_it = 20 * m + 100;
  for (std::size_t it = 0; it < max_it && rr > tol2; ++it) {
    apply_masked_laplacian(g, idx, local, p, ap);
    double alpha = rr / dot(p, ap);
    for (std::size_t i = 0; i < m; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    double rr_new = dot(r, r);
    double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < m; ++i) p[i] = r[i] + beta * p[i];
  }
  require(rr <= tol2 * 1e4, Errc::NoConvergence,
          "conjugate gradient stalled on the masked Laplacian");
}

}  // namespace

double dirichlet_lambda1(const Grid& g, const RegionSpec& K) {
  std::vector<std::size_t> idx = region_indices(g, K);
  require(!idx.empty(), Errc::BadConfig, "region contains no grid points");
  std::vector<std::int32_t> local(g.size(), -1);
  for (std::size_t i = 0; i < idx.size(); ++i)
    local[idx[i]] = std::int32_t(i);

  std::size_t m = idx.size();
  std::vector<double> x(m, 1.0), y(m), ax(m);
  double nrm = std::sqrt(dot(x, x));
  for (auto& v : x) v /= nrm;

  // inverse power iteration; the ground state is simple and positive, so a
  // constant start vector always has overlap with it
  double rho_prev = 0.0;
  for (int it = 0; it < 200; ++it) {
    cg_solve(g, idx, local, x, y);
    nrm = std::sqrt(dot(y, y));
    require(nrm > 0.0, Errc::EigSolveFailure, "inverse iteration collapsed");
    for (std::size_t i = 0; i < m; ++i) x[i] = y[i] / nrm;
    apply_masked_laplacian(g, idx, local, x, ax);
    double rho = dot(x, ax);
    if (it > 0 && std::abs(rho - rho_prev) <= 1e-13 * rho) return rho;
    rho_prev = rho;
  }
  fail(Errc::EigSolveFailure, "inverse power iteration did not settle");
}

double classical_constant(const Grid& g, const RegionSpec& K) {
  return 1.0 / std::sqrt(dirichlet_lambda1(g, K));
}

double theoretical_constant(ConstantKind kind, const Grid& g,
                            const RegionSpec& K, double s, double t,
                            std::optional<double> eps) {
  require(s >= t && t >= 0.0, Errc::InvalidExponentOrder,
          "constants require s >= t >= 0");
  double mass = K.volume(g.n) * unit_ball_volume(g.n);
  switch (kind) {
    case ConstantKind::freq_split: {
      double eps_max = std::pow(mass, -1.0 / double(g.n));
      auto at = [&](double e) {
        return std::pow(e, t - s) /
               std::sqrt(1.0 - std::pow(e, double(g.n)) * mass);
      };
      if (eps) {
        require(*eps > 0.0 && *eps < eps_max, Errc::EpsTooLarge,
                "split radius must lie in (0, (|K||B(0,1)|)^{-1/n})");
        return at(*eps);
      }
      double best = at(eps_max / 1001.0);
      for (int j = 2; j <= 1000; ++j)
        best = std::min(best, at(eps_max * double(j) / 1001.0));
      return best;
    }
    case ConstantKind::simple:
      return std::sqrt(2.0) * std::pow(2.0 * mass, (s - t) / double(g.n));
    case ConstantKind::interp: {
      bool high = (s >= t && t >= 1.0);
      bool mixed = (s >= 1.0 && 1.0 >= t && t >= 0.0);
      require(high || mixed, Errc::InvalidExponentOrder,
              "interp constant needs s >= t >= 1 or s >= 1 >= t >= 0");
      return std::pow(classical_constant(g, K), s - t);
    }
  }
  fail(Errc::BadConfig, "unknown constant kind");
}

double poincare_ratio(const Field& u, const RegionSpec& K, double s,
                      double t) {
  require(s >= t && t >= 0.0, Errc::InvalidExponentOrder,
          "ratio requires s >= t >= 0");
  require(l2_norm(u) > 0.0, Errc::ZeroField, "ratio of the zero field");
  require(is_supported_in(u, K), Errc::SupportViolation,
          "field is not supported inside the region");
  double num = l2_norm(frac_laplacian(u, 0.5 * t));
  double den = l2_norm(frac_laplacian(u, 0.5 * s));
  return num / den;
}

void ViolationReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  require(bool(out), Errc::IoFailure, "cannot open " + path);
  out << "sample_id,ratio,constant,violated\n" << std::setprecision(17);
  for (const Row& r : rows)
    out << r.sample_id << ',' << r.ratio << ',' << constant << ','
        << (r.violated ? 1 : 0) << '\n';
}

void ViolationReport::write_json(const std::string& path) const {
  nlohmann::json j{{"s", s},
                   {"t", t},
                   {"kind", constant_kind_name(kind)},
                   {"constant", constant},
                   {"max_ratio", max_ratio},
                   {"samples", samples},
                   {"violations", violations}};
  std::ofstream out(path);
  require(bool(out), Errc::IoFailure, "cannot open " + path);
  out << j.dump(2) << '\n';
}

ViolationReport verify_sweep(const Grid& g, const RegionSpec& K,
                             const SamplerConfig& cfg, double s, double t,
                             ConstantKind kind, std::optional<double> eps) {
  ViolationReport rep;
  rep.s = s;
  rep.t = t;
  rep.kind = kind;
  rep.constant = theoretical_constant(kind, g, K, s, t, eps);
  rep.samples = cfg.num_samples;
  auto center = K.inscribed_center(g.n);
  double radius = K.inscribed_radius(g.n);
  for (std::size_t i = 0; i < cfg.num_samples; ++i) {
    // sample i is fully determined by derive(seed, i); reruns are bit-stable
    Field u = random_bump_superposition(g, center, radius, cfg.max_bumps,
                                        Rng::derive(cfg.seed, i));
    double ratio = poincare_ratio(u, K, s, t);
    bool viol = ratio > rep.constant + 1e-9;
    rep.rows.push_back({i, ratio, viol});
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    if (viol) ++rep.violations;
  }
  return rep;
}

}  // namespace fraclab
