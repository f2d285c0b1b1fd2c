#include "fft_convolution.hpp"

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <map>
#include <mutex>
#include <sstream>

#include "repchain/pmf.hpp"

namespace repchain::detail {

namespace {

// The FFTW planner is not thread-safe; execution with the new-array interface is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

// Real-to-complex and complex-to-real plans of one size, plus scratch.
class Transform {
 public:
  explicit Transform(std::size_t n)
      : n_(n),
        real_(static_cast<double*>(fftw_malloc(sizeof(double) * n))),
        spec_a_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)))),
        spec_b_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)))) {
    if (!real_ || !spec_a_ || !spec_b_) throw std::bad_alloc();
    std::lock_guard lock(planner_mutex());
    const int len = static_cast<int>(n);
    forward_ = fftw_plan_dft_r2c_1d(len, real_.get(), spec_a_.get(), FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(len, spec_a_.get(), real_.get(), FFTW_ESTIMATE);
  }

  ~Transform() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
  }

  Transform(const Transform&) = delete;
  Transform& operator=(const Transform&) = delete;

  std::size_t size() const { return n_; }
  std::size_t spectrum_size() const { return n_ / 2 + 1; }

  // Zero-pads `in` to n and writes its spectrum to `spec`.
  void forward(std::span<const double> in, fftw_complex* spec) {
    const std::size_t m = std::min(in.size(), n_);
    std::copy_n(in.begin(), m, real_.get());
    std::fill(real_.get() + m, real_.get() + n_, 0.0);
    fftw_execute_dft_r2c(forward_, real_.get(), spec);
  }

  // Inverse transform of `spec` (destroyed), scaled, first out.size() entries.
  void inverse(fftw_complex* spec, std::span<double> out) {
    fftw_execute_dft_c2r(inverse_, spec, real_.get());
    const double scale = 1.0 / static_cast<double>(n_);
    const std::size_t m = std::min(out.size(), n_);
    for (std::size_t i = 0; i < m; ++i) out[i] = real_.get()[i] * scale;
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(m), out.end(), 0.0);
  }

  fftw_complex* scratch_a() { return spec_a_.get(); }
  fftw_complex* scratch_b() { return spec_b_.get(); }

 private:
  std::size_t n_;
  std::unique_ptr<double, FftwDeleter> real_;
  std::unique_ptr<fftw_complex, FftwDeleter> spec_a_;
  std::unique_ptr<fftw_complex, FftwDeleter> spec_b_;
  fftw_plan forward_{};
  fftw_plan inverse_{};
};

Transform& cached_transform(std::size_t n) {
  thread_local std::map<std::size_t, std::unique_ptr<Transform>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<Transform>(n);
  return *slot;
}

void multiply_into(fftw_complex* acc, const fftw_complex* other, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    const double re = acc[i][0] * other[i][0] - acc[i][1] * other[i][1];
    const double im = acc[i][0] * other[i][1] + acc[i][1] * other[i][0];
    acc[i][0] = re;
    acc[i][1] = im;
  }
}

// Below this many multiply-adds a plain double loop is used. It is exact up to
// rounding in every entry, including tiny tail entries that FFT noise swamps.
constexpr std::size_t kDirectWork = std::size_t{1} << 21;

// out[z] for z < out.size(), summing only nonnegative-index products.
void direct_convolve(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t x = 0; x < a.size() && x < out.size(); ++x) {
    const double ax = a[x];
    if (ax == 0.0) continue;
    const std::size_t stop = std::min(b.size(), out.size() - x);
    double* o = out.data() + x;
    for (std::size_t y = 0; y < stop; ++y) o[y] += ax * b[y];
  }
}

// Length of the nonzero prefix after dropping trailing zeros.
std::size_t effective_length(std::span<const double> v) {
  std::size_t n = v.size();
  while (n > 0 && v[n - 1] == 0.0) --n;
  return n;
}

}  // namespace

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft_convolve(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  const std::size_t len = out.size();
  if (len == 0) return;
  const std::size_t la = std::min(effective_length(a), len);
  const std::size_t lb = std::min(effective_length(b), len);
  if (la == 0 || lb == 0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  if (la * lb <= kDirectWork) {
    direct_convolve(a.first(la), b.first(lb), out);
    return;
  }
  const std::size_t needed = la + lb - 1;
  Transform& tr = cached_transform(next_power_of_two(std::max<std::size_t>(needed, 2)));
  tr.forward(a.first(la), tr.scratch_a());
  tr.forward(b.first(lb), tr.scratch_b());
  multiply_into(tr.scratch_a(), tr.scratch_b(), tr.spectrum_size());
  tr.inverse(tr.scratch_a(), out);
}

struct KernelConvolver::Impl {
  Transform* transform = nullptr;
  std::size_t length = 0;
  std::vector<double> kernel;
  std::vector<std::complex<double>> kernel_spectrum;  // computed on first FFT use
};

KernelConvolver::KernelConvolver(std::span<const double> kernel, std::size_t length)
    : impl_(std::make_unique<Impl>()) {
  impl_->length = length;
  const auto used = kernel.first(std::min(effective_length(kernel), length));
  impl_->kernel.assign(used.begin(), used.end());
}

KernelConvolver::~KernelConvolver() = default;

void KernelConvolver::apply(std::span<const double> in, std::span<double> out) {
  const std::size_t lin = std::min(effective_length(in), impl_->length);
  if (lin * impl_->kernel.size() <= kDirectWork) {
    direct_convolve(in.first(lin), impl_->kernel, out.first(std::min(out.size(), impl_->length)));
    if (out.size() > impl_->length)
      std::fill(out.begin() + static_cast<std::ptrdiff_t>(impl_->length), out.end(), 0.0);
    return;
  }
  if (!impl_->transform) {
    impl_->transform = &cached_transform(next_power_of_two(std::max<std::size_t>(2 * impl_->length, 2)));
    Transform& tr = *impl_->transform;
    tr.forward(impl_->kernel, tr.scratch_b());
    impl_->kernel_spectrum.resize(tr.spectrum_size());
    for (std::size_t i = 0; i < tr.spectrum_size(); ++i)
      impl_->kernel_spectrum[i] = {tr.scratch_b()[i][0], tr.scratch_b()[i][1]};
  }
  Transform& tr = *impl_->transform;
  tr.forward(in.first(std::min(in.size(), impl_->length)), tr.scratch_a());
  fftw_complex* s = tr.scratch_a();
  for (std::size_t i = 0; i < tr.spectrum_size(); ++i) {
    const std::complex<double> v = std::complex<double>(s[i][0], s[i][1]) * impl_->kernel_spectrum[i];
    s[i][0] = v.real();
    s[i][1] = v.imag();
  }
  tr.inverse(s, out.first(std::min(out.size(), impl_->length)));
  if (out.size() > impl_->length)
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(impl_->length), out.end(), 0.0);
}

void clamp_roundoff(std::span<double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    double& v = values[i];
    if (v >= 0.0) continue;
    if (v > -1e-12) {
      v = 0.0;
      continue;
    }
    std::ostringstream msg;
    msg << "negative probability " << v << " at index " << i << " exceeds round-off";
    throw NumericalError(msg.str());
  }
}

}  // namespace repchain::detail
