#include "nslab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace nslab::fft {
namespace {

struct PlanPair {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

std::mutex g_plan_mutex;
std::map<int, PlanPair>& plan_cache() {
  static std::map<int, PlanPair> cache;
  return cache;
}

// FFTW plan creation is not thread-safe; execution with the new-array
// interface is.
const PlanPair& plans_for(int n) {
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  auto& cache = plan_cache();
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<std::complex<double>> scratch(static_cast<size_t>(n) * n);
  auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
  PlanPair pair;
  pair.fwd = fftw_plan_dft_2d(n, n, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
  pair.bwd = fftw_plan_dft_2d(n, n, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
  if (!pair.fwd || !pair.bwd) throw std::runtime_error("fftw plan creation failed");
  return cache.emplace(n, pair).first->second;
}

}  // namespace

void forward2d(int n, std::complex<double>* data) {
  const PlanPair& pp = plans_for(n);
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(pp.fwd, p, p);
  const double scale = 1.0 / (static_cast<double>(n) * n);
  const size_t m = static_cast<size_t>(n) * n;
  for (size_t i = 0; i < m; ++i) data[i] *= scale;
}

void backward2d(int n, std::complex<double>* data) {
  const PlanPair& pp = plans_for(n);
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(pp.bwd, p, p);
}

std::vector<std::complex<double>> forward2d(int n, const std::vector<std::complex<double>>& in) {
  auto out = in;
  forward2d(n, out.data());
  return out;
}

std::vector<std::complex<double>> backward2d(int n, const std::vector<std::complex<double>>& in) {
  auto out = in;
  backward2d(n, out.data());
  return out;
}

}  // namespace nslab::fft
