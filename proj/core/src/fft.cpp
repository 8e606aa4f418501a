#include "fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>

namespace latticelab::detail {

namespace {
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  std::lock_guard<std::mutex> lock(plan_mutex());
  rbuf_ = fftw_alloc_real(n);
  auto* c = fftw_alloc_complex(n / 2 + 1);
  cbuf_ = c;
  fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), rbuf_, c, FFTW_ESTIMATE);
  inv_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), c, rbuf_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(plan_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(inv_));
  fftw_free(rbuf_);
  fftw_free(static_cast<fftw_complex*>(cbuf_));
}

void RealFft::forward(const double* in, std::complex<double>* out) {
  std::memcpy(rbuf_, in, n_ * sizeof(double));
  fftw_execute(static_cast<fftw_plan>(fwd_));
  std::memcpy(static_cast<void*>(out), cbuf_, (n_ / 2 + 1) * sizeof(fftw_complex));
}

void RealFft::inverse(const std::complex<double>* in, double* out) {
  std::memcpy(cbuf_, static_cast<const void*>(in), (n_ / 2 + 1) * sizeof(fftw_complex));
  fftw_execute(static_cast<fftw_plan>(inv_));
  std::memcpy(out, rbuf_, n_ * sizeof(double));
}

std::size_t good_fft_size(std::size_t min_n) {
  std::size_t best = 1;
  while (best < min_n) best <<= 1;
  // 3 * 2^k is often tighter
  for (std::size_t t = 3; t < best; t <<= 1)
    if (t >= min_n && t < best) best = t;
  return best;
}

std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t m = a.size() + b.size() - 1;
  if (a.size() < 64 || b.size() < 64) {
    std::vector<double> out(m, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double ai = a[i];
      if (ai == 0.0) continue;
      for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += ai * b[j];
    }
    return out;
  }
  const std::size_t n = good_fft_size(m);
  RealFft fft(n);
  std::vector<double> pa(n, 0.0), pb(n, 0.0);
  std::copy(a.begin(), a.end(), pa.begin());
  std::copy(b.begin(), b.end(), pb.begin());
  std::vector<std::complex<double>> fa(n / 2 + 1), fb(n / 2 + 1);
  fft.forward(pa.data(), fa.data());
  fft.forward(pb.data(), fb.data());
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  fft.inverse(fa.data(), pa.data());
  std::vector<double> out(m);
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < m; ++i) out[i] = pa[i] * inv;
  return out;
}

}  // namespace latticelab::detail
