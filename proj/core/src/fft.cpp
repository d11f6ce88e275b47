#include "fraclab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace fraclab {
namespace fft {

namespace {

std::mutex planner_mutex;

struct PlanKey {
  int n;
  int N;
  int sign;
  bool operator<(const PlanKey& o) const {
    if (n != o.n) return n < o.n;
    if (N != o.N) return N < o.N;
    return sign < o.sign;
  }
};

// Cached in-place plans; fftw_execute_dft reruns them on per-call buffers.
fftw_plan get_plan(const Grid& g, int sign) {
  static std::map<PlanKey, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(planner_mutex);
  PlanKey key{g.n, g.N, sign};
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  int dims[3] = {g.N, g.N, g.N};
  fftw_complex* tmp = fftw_alloc_complex(g.size());
  fftw_plan plan = fftw_plan_dft(g.n, dims, tmp, tmp, sign, FFTW_ESTIMATE);
  fftw_free(tmp);
  cache.emplace(key, plan);
  return plan;
}

void execute(const Grid& g, std::vector<std::complex<double>>& buf, int sign) {
  require(buf.size() == g.size(), Errc::GridMismatch, "transform buffer size mismatch");
  fftw_plan plan = get_plan(g, sign);
  // fftw_malloc guarantees the alignment the cached plan was built with
  fftw_complex* work = fftw_alloc_complex(g.size());
  for (std::size_t i = 0; i < buf.size(); ++i) {
    work[i][0] = buf[i].real();
    work[i][1] = buf[i].imag();
  }
  fftw_execute_dft(plan, work, work);
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = {work[i][0], work[i][1]};
  fftw_free(work);
}

}  // namespace

void forward(const Grid& g, std::vector<std::complex<double>>& buf) {
  execute(g, buf, FFTW_FORWARD);
}

void inverse(const Grid& g, std::vector<std::complex<double>>& buf) {
  execute(g, buf, FFTW_BACKWARD);
  double scale = 1.0 / double(g.size());
  for (auto& z : buf) z *= scale;
}

}  // namespace fft
}  // namespace fraclab
