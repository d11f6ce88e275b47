#pragma once

#include <complex>
#include <vector>

#include "fraclab/grid.hpp"

namespace fraclab {
namespace fft {

// In-place complex DFT over the full grid, FFTW layout (last axis fastest).
// forward: sum_j u_j exp(-2 pi i jk/N) per axis, unnormalized.
// inverse: normalized by 1/N^n, so inverse(forward(u)) == u.
// Plans are FFTW_ESTIMATE only (deterministic) and cached behind a mutex;
// execution uses per-call buffers and is safe to run concurrently.
void forward(const Grid& g, std::vector<std::complex<double>>& buf);
void inverse(const Grid& g, std::vector<std::complex<double>>& buf);

}  // namespace fft
}  // namespace fraclab
