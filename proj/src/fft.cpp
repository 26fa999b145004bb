#include "rdcircle/fft.hpp"

#include <cstring>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace rdcircle {

namespace {
// Planner calls are not thread-safe in FFTW; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct RealFft::Impl {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

RealFft::RealFft(std::size_t n) : n_(n), impl_(std::make_unique<Impl>()) {
  if (n < 2) throw std::invalid_argument("fft size must be at least 2");
  const int len = static_cast<int>(n);
  std::lock_guard lock(planner_mutex());
  impl_->real = fftw_alloc_real(n);
  impl_->spec = fftw_alloc_complex(n / 2 + 1);
  impl_->r2c = fftw_plan_dft_r2c_1d(len, impl_->real, impl_->spec, FFTW_ESTIMATE);
  impl_->c2r = fftw_plan_dft_c2r_1d(len, impl_->spec, impl_->real, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(impl_->c2r);
  fftw_destroy_plan(impl_->r2c);
  fftw_free(impl_->spec);
  fftw_free(impl_->real);
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  std::memcpy(impl_->real, in.data(), n_ * sizeof(double));
  fftw_execute(impl_->r2c);
  const double scale = 1.0 / static_cast<double>(n_);
  for (std::size_t k = 0; k < modes(); ++k)
    out[k] = std::complex<double>(impl_->spec[k][0] * scale, impl_->spec[k][1] * scale);
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  for (std::size_t k = 0; k < modes(); ++k) {
    impl_->spec[k][0] = in[k].real();
    impl_->spec[k][1] = in[k].imag();
  }
  fftw_execute(impl_->c2r);
  std::memcpy(out.data(), impl_->real, n_ * sizeof(double));
}

}  // namespace rdcircle
