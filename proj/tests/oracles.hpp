#pragma once

// Independent reference implementations used as oracles. Everything here is
// written against the definitions directly (naive sums, explicit stencils),
// never by calling the code paths under test.

#include <complex>
#include <functional>
#include <vector>

#include "fraclab/field.hpp"

namespace oracles {

using fraclab::Field;
using fraclab::Grid;

// Naive O(N^2n) DFT: hat_u[k] = sum_j u_j exp(-2 pi i <j,k>/N).
inline std::vector<std::complex<double>> naive_dft(const Field& u) {
  const Grid& g = u.grid;
  std::size_t M = g.size();
  std::vector<std::complex<double>> hat(M);
  for (std::size_t kf = 0; kf < M; ++kf) {
    auto k = g.unflatten(kf);
    std::complex<double> acc = 0.0;
    for (std::size_t jf = 0; jf < M; ++jf) {
      auto j = g.unflatten(jf);
      double phase = 0.0;
      for (int a = 0; a < g.n; ++a)
        phase += double(j[std::size_t(a)]) * double(k[std::size_t(a)]);
      phase *= -2.0 * M_PI / g.N;
      acc += u[jf] * std::complex<double>(std::cos(phase), std::sin(phase));
    }
    hat[kf] = acc;
  }
  return hat;
}

// Applies a radial multiplier through the naive DFT and naive inverse.
inline Field naive_multiplier(const Field& u, const std::function<double(double)>& m_of_xi_sq,
                              double zero_mode_value) {
  const Grid& g = u.grid;
  fraclab::FreqGrid fg(g);
  auto hat = naive_dft(u);
  for (std::size_t kf = 0; kf < hat.size(); ++kf) {
    double x2 = fg.xi_sq(kf);
    hat[kf] *= (x2 == 0.0) ? zero_mode_value : m_of_xi_sq(x2);
  }
  std::size_t M = g.size();
  Field out(g);
  for (std::size_t jf = 0; jf < M; ++jf) {
    auto j = g.unflatten(jf);
    std::complex<double> acc = 0.0;
    for (std::size_t kf = 0; kf < M; ++kf) {
      auto k = g.unflatten(kf);
      double phase = 0.0;
      for (int a = 0; a < g.n; ++a)
        phase += double(j[std::size_t(a)]) * double(k[std::size_t(a)]);
      phase *= 2.0 * M_PI / g.N;
      acc += hat[kf] * std::complex<double>(std::cos(phase), std::sin(phase));
    }
    out[jf] = acc.real() / double(M);
  }
  return out;
}

// Second-difference Laplacian with periodic wrap, written out directly.
inline Field fd_laplacian(const Field& u) {
  const Grid& g = u.grid;
  Field out(g);
  for (std::size_t i = 0; i < u.size(); ++i) {
    auto idx = g.unflatten(i);
    double acc = 2.0 * g.n * u[i];
    for (int a = 0; a < g.n; ++a) {
      auto nb = idx;
      nb[std::size_t(a)] = (idx[std::size_t(a)] + 1) % g.N;
      acc -= u[g.flatten(nb)];
      nb[std::size_t(a)] = (idx[std::size_t(a)] - 1 + g.N) % g.N;
      acc -= u[g.flatten(nb)];
    }
    out[i] = acc / (g.h * g.h);
  }
  return out;
}

// Frequency-sum Sobolev norm computed from the naive DFT with explicit
// Parseval weights.
inline double freq_sum_sobolev(const Field& u, double r, bool homogeneous) {
  const Grid& g = u.grid;
  fraclab::FreqGrid fg(g);
  auto hat = naive_dft(u);
  double acc = 0.0;
  for (std::size_t kf = 0; kf < hat.size(); ++kf) {
    double x2 = fg.xi_sq(kf);
    double w;
    if (homogeneous)
      w = (x2 == 0.0) ? ((r == 0.0) ? 1.0 : 0.0) : std::pow(x2, r);
    else
      w = std::pow(1.0 + x2, r);
    acc += w * std::norm(hat[kf]);
  }
  double hn = std::pow(g.h, g.n);
  double box = std::pow(2.0 * g.L, 0.5 * g.n);
  return hn / box * std::sqrt(acc);
}

inline double rel_err(const Field& got, const Field& want) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    double d = got[i] - want[i];
    num += d * d;
    den += want[i] * want[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

inline double max_abs_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Closed-form smallest eigenvalue of the second-difference Dirichlet matrix
// on a 1-D interval of the given length sampled with spacing h (interior
// points only, (m+1) h = length): lambda_k = (4/h^2) sin^2(k pi h / (2 len)).
inline double fd_dirichlet_lambda1_interval(double length, double h) {
  double s = std::sin(0.5 * 3.14159265358979323846 * h / length);
  return 4.0 / (h * h) * s * s;
}

}  // namespace oracles
