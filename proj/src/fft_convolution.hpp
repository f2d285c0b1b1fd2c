#pragma once

// Linear convolution of real sequences, truncated to a requested output
// length. Small products use a direct loop, larger ones FFTW. Plans and
// scratch buffers are cached per transform size and per thread, so repeated
// convolutions across recursion levels reuse them.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace repchain::detail {

/// Smallest power of two >= n.
std::size_t next_power_of_two(std::size_t n);

/// out[z] = sum_x a[x] b[z - x] for z < out.size(). Inputs longer than the
/// output are truncated first. Raw result, no clamping.
void fft_convolve(std::span<const double> a, std::span<const double> b, std::span<double> out);

/// Repeated convolution against one fixed kernel, all truncated to `length`.
/// The kernel spectrum is computed once.
class KernelConvolver {
 public:
  KernelConvolver(std::span<const double> kernel, std::size_t length);
  ~KernelConvolver();
  KernelConvolver(const KernelConvolver&) = delete;
  KernelConvolver& operator=(const KernelConvolver&) = delete;

  void apply(std::span<const double> in, std::span<double> out);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Clamps entries in (-1e-12, 0) to zero; throws NumericalError below that.
void clamp_roundoff(std::span<double> values);

}  // namespace repchain::detail
