#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace latticelab::detail {

// Real linear convolution through FFTW r2c/c2r. Plans are created under a
// global lock and cached per size.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  // in has n entries (zero padded by caller), out gets n/2+1 bins
  void forward(const double* in, std::complex<double>* out);
  // unnormalised inverse; caller divides by n
  void inverse(const std::complex<double>* in, double* out);

 private:
  std::size_t n_;
  void* fwd_;
  void* inv_;
  double* rbuf_;
  void* cbuf_;
};

std::size_t good_fft_size(std::size_t min_n);

// Full linear convolution of a and b.
std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace latticelab::detail
