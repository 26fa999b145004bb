#include "rdcircle/grid_function.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>

#include "rdcircle/fft.hpp"
#include "rdcircle/forcing.hpp"

namespace rdcircle {

RealFft& fft_for(std::size_t n) {
  thread_local std::map<std::size_t, std::unique_ptr<RealFft>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<RealFft>(n);
  return *slot;
}

bool is_valid_grid_size(std::size_t n) { return n >= 16 && std::has_single_bit(n); }

double GridFunction::grid_point(std::size_t n, std::size_t j) {
  return kTwoPi * static_cast<double>(j) / static_cast<double>(n);
}

GridFunction GridFunction::from_values(std::vector<double> values) {
  const std::size_t n = values.size();
  if (!is_valid_grid_size(n)) throw std::invalid_argument("grid size must be a power of two >= 16");
  GridFunction u;
  u.coeffs_.resize(n / 2 + 1);
  fft_for(n).forward(values, u.coeffs_);
  u.values_ = std::move(values);
  return u;
}

GridFunction GridFunction::from_coefficients(std::size_t n, Spectrum coeffs) {
  if (!is_valid_grid_size(n)) throw std::invalid_argument("grid size must be a power of two >= 16");
  if (coeffs.size() != n / 2 + 1) throw std::invalid_argument("coefficient count must be N/2 + 1");
  coeffs.front() = coeffs.front().real();
  coeffs.back() = coeffs.back().real();
  GridFunction u;
  u.values_.resize(n);
  fft_for(n).inverse(coeffs, u.values_);
  u.coeffs_ = std::move(coeffs);
  return u;
}

GridFunction GridFunction::constant(std::size_t n, double c) {
  return from_values(std::vector<double>(n, c));
}

double GridFunction::operator()(double x) const {
  const std::size_t n = size();
  const std::size_t half = n / 2;
  double sum = coeffs_[0].real() + coeffs_[half].real() * std::cos(static_cast<double>(half) * x);
  for (std::size_t k = 1; k < half; ++k)
    sum += 2.0 * (coeffs_[k] * std::polar(1.0, static_cast<double>(k) * x)).real();
  return sum;
}

double GridFunction::derivative_at(double x) const {
  const std::size_t half = size() / 2;
  double sum = 0.0;
  for (std::size_t k = 1; k < half; ++k) {
    const double kk = static_cast<double>(k);
    sum += 2.0 * (std::complex<double>(0.0, kk) * coeffs_[k] * std::polar(1.0, kk * x)).real();
  }
  return sum;
}

double GridFunction::second_derivative_at(double x) const {
  const std::size_t half = size() / 2;
  double sum = 0.0;
  for (std::size_t k = 1; k < half; ++k) {
    const double kk = static_cast<double>(k);
    sum -= 2.0 * kk * kk * (coeffs_[k] * std::polar(1.0, kk * x)).real();
  }
  return sum;
}

std::vector<double> GridFunction::refined(std::size_t factor) const {
  const std::size_t n = size();
  const std::size_t fine = n * factor;
  Spectrum padded(fine / 2 + 1, {0.0, 0.0});
  std::copy(coeffs_.begin(), coeffs_.end() - 1, padded.begin());
  // The Nyquist cosine splits evenly between ±N/2 once it is no longer the top mode.
  padded[n / 2] = factor > 1 ? 0.5 * coeffs_.back() : coeffs_.back();
  std::vector<double> out(fine);
  fft_for(fine).inverse(padded, out);
  return out;
}

GridFunction GridFunction::operator+(const GridFunction& o) const {
  std::vector<double> v(values_);
  for (std::size_t j = 0; j < v.size(); ++j) v[j] += o.values_[j];
  return from_values(std::move(v));
}

GridFunction GridFunction::operator-(const GridFunction& o) const {
  std::vector<double> v(values_);
  for (std::size_t j = 0; j < v.size(); ++j) v[j] -= o.values_[j];
  return from_values(std::move(v));
}

GridFunction GridFunction::operator*(double s) const {
  std::vector<double> v(values_);
  for (double& x : v) x *= s;
  return from_values(std::move(v));
}

GridFunction deriv_x(const GridFunction& u) {
  Spectrum c(u.coefficients().begin(), u.coefficients().end());
  for (std::size_t k = 0; k < c.size(); ++k) c[k] *= std::complex<double>(0.0, static_cast<double>(k));
  c.back() = 0.0;
  return GridFunction::from_coefficients(u.size(), std::move(c));
}

GridFunction reflect(const GridFunction& u, double a) {
  Spectrum c(u.coefficients().begin(), u.coefficients().end());
  for (std::size_t k = 0; k < c.size(); ++k)
    c[k] = std::conj(c[k]) * std::polar(1.0, -2.0 * static_cast<double>(k) * a);
  return GridFunction::from_coefficients(u.size(), std::move(c));
}

GridFunction translate_space(const GridFunction& u, double a) {
  Spectrum c(u.coefficients().begin(), u.coefficients().end());
  const std::size_t half = u.size() / 2;
  for (std::size_t k = 0; k < half; ++k) c[k] *= std::polar(1.0, static_cast<double>(k) * a);
  c[half] = c[half].real() * std::cos(static_cast<double>(half) * a);
  return GridFunction::from_coefficients(u.size(), std::move(c));
}

MaxValue max_value(const GridFunction& u) {
  constexpr std::size_t kRefine = 4;
  const auto fine = u.refined(kRefine);
  const auto best = std::max_element(fine.begin(), fine.end());
  const double h = kTwoPi / static_cast<double>(fine.size());
  const double x0 = h * static_cast<double>(best - fine.begin());
  double x = x0;
  for (int it = 0; it < 8; ++it) {
    const double d2 = u.second_derivative_at(x);
    if (!(d2 < 0.0)) break;
    const double next = x - u.derivative_at(x) / d2;
    if (std::abs(next - x0) > h) break;
    if (std::abs(next - x) < 1e-15) {
      x = next;
      break;
    }
    x = next;
  }
  double value = u(x);
  if (value < *best) {
    x = x0;
    value = *best;
  }
  return {value, wrap_phase(x)};
}

double norm_sup(const GridFunction& u) {
  double m = 0.0;
  for (double v : u.values()) m = std::max(m, std::abs(v));
  return m;
}

double norm_l2(const GridFunction& u) {
  double s = 0.0;
  for (double v : u.values()) s += v * v;
  return std::sqrt(s / static_cast<double>(u.size()));
}

double norm_h1(const GridFunction& u) { return norm_l2(u) + norm_l2(deriv_x(u)); }

double norm_c1(const GridFunction& u) { return norm_sup(u) + norm_sup(deriv_x(u)); }

double distance_c1(const GridFunction& u, const GridFunction& v) { return norm_c1(u - v); }

double inner_product(std::span<const std::complex<double>> a, std::span<const std::complex<double>> b,
                     std::size_t n) {
  const std::size_t half = n / 2;
  double s = a[0].real() * b[0].real() + a[half].real() * b[half].real();
  for (std::size_t k = 1; k < half; ++k) s += 2.0 * (a[k].real() * b[k].real() + a[k].imag() * b[k].imag());
  return s;
}

}  // namespace rdcircle
