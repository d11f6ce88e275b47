#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>

#include "fraclab/errors.hpp"

namespace fraclab {

using Point = std::array<double, 3>;  // unused trailing coordinates are 0

// Periodic uniform grid on [-L, L)^n, a torus surrogate for R^n.
// Compactly supported data is expected to keep a padding margin >= L/2
// from the box boundary so wrap-around leakage stays measurable.
struct Grid {
  int n = 1;       // spatial dimension, 1..3
  int N = 8;       // points per axis, power of two
  double L = 1.0;  // box half-length
  double h = 0.25; // spacing 2L/N

  static Grid make(int n, int N, double L, std::size_t point_cap = std::size_t(1) << 22);

  std::size_t size() const {
    std::size_t p = 1;
    for (int a = 0; a < n; ++a) p *= std::size_t(N);
    return p;
  }

  // Row-major flattening, last axis fastest (FFTW layout).
  std::size_t flatten(const std::array<int, 3>& idx) const {
    std::size_t f = 0;
    for (int a = 0; a < n; ++a) f = f * std::size_t(N) + std::size_t(idx[std::size_t(a)]);
    return f;
  }
  std::array<int, 3> unflatten(std::size_t flat) const {
    std::array<int, 3> idx{0, 0, 0};
    for (int a = n - 1; a >= 0; --a) {
      idx[std::size_t(a)] = int(flat % std::size_t(N));
      flat /= std::size_t(N);
    }
    return idx;
  }

  double coord(int j) const { return -L + h * j; }  // x_j along one axis
  Point point(std::size_t flat) const {
    auto idx = unflatten(flat);
    Point x{0.0, 0.0, 0.0};
    for (int a = 0; a < n; ++a) x[std::size_t(a)] = coord(idx[std::size_t(a)]);
    return x;
  }
  // Nearest grid index of a coordinate, clamped into range.
  int coord_index(double x) const {
    int j = int(std::lround((x + L) / h));
    if (j < 0) j = 0;
    if (j >= N) j = N - 1;
    return j;
  }

  bool operator==(const Grid& o) const { return n == o.n && N == o.N && L == o.L; }
  bool operator!=(const Grid& o) const { return !(*this == o); }
};

// Discrete frequencies xi_k = pi k / L in standard FFT ordering; the
// Nyquist mode sits at k = -N/2. Exactly one zero frequency per axis.
struct FreqGrid {
  Grid grid;

  explicit FreqGrid(const Grid& g) : grid(g) {}

  int mode(int j) const { return j < grid.N / 2 ? j : j - grid.N; }
  double xi(int j) const { return M_PI * mode(j) / grid.L; }

  double xi_sq(std::size_t flat) const {
    auto idx = grid.unflatten(flat);
    double s = 0.0;
    for (int a = 0; a < grid.n; ++a) {
      double x = xi(idx[std::size_t(a)]);
      s += x * x;
    }
    return s;
  }
};

// Fractional exponent bookkeeping: s = floor(s) + s', s' in [0,1).
struct Exponent {
  double s = 0.0;
  int floor_s = 0;
  double s_prime = 0.0;
  bool fractional = false;

  Exponent() = default;
  Exponent(double value) : s(value) {  // NOLINT: implicit by design
    floor_s = int(std::floor(value));
    s_prime = value - floor_s;
    fractional = s_prime != 0.0;
  }
};

}  // namespace fraclab
