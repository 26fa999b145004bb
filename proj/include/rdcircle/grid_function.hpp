#pragma once

// Real periodic functions on S¹ = R/2πZ sampled at x_j = 2πj/N, with their
// spectral coefficients kept alongside.

#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace rdcircle {

class RealFft;

/// Thread-local cached transform for size n.
RealFft& fft_for(std::size_t n);

using Spectrum = std::vector<std::complex<double>>;

class GridFunction {
 public:
  GridFunction() = default;

  /// N must be a power of two, at least 16.
  static GridFunction from_values(std::vector<double> values);

  /// coeffs[k] = û_k for k = 0..N/2; imaginary parts of û_0 and û_{N/2} are dropped.
  static GridFunction from_coefficients(std::size_t n, Spectrum coeffs);

  static GridFunction constant(std::size_t n, double c);

  template <class F>
  static GridFunction sample(std::size_t n, F&& f) {
    std::vector<double> v(n);
    for (std::size_t j = 0; j < n; ++j) v[j] = f(grid_point(n, j));
    return from_values(std::move(v));
  }

  static double grid_point(std::size_t n, std::size_t j);

  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<const std::complex<double>> coefficients() const { return coeffs_; }
  double operator[](std::size_t j) const { return values_[j]; }

  /// Spectral interpolant at an arbitrary point.
  double operator()(double x) const;
  /// Derivative of the interpolant.
  double derivative_at(double x) const;
  /// Second derivative of the interpolant.
  double second_derivative_at(double x) const;

  /// Interpolant sampled on a grid `factor` times finer (zero padding).
  std::vector<double> refined(std::size_t factor) const;

  GridFunction operator+(const GridFunction& o) const;
  GridFunction operator-(const GridFunction& o) const;
  GridFunction operator*(double s) const;

 private:
  std::vector<double> values_;
  Spectrum coeffs_;
};

bool is_valid_grid_size(std::size_t n);

/// Spectral derivative: û_k → ik û_k (Nyquist mode dropped).
GridFunction deriv_x(const GridFunction& u);

/// ρ_a u(x) = u(2a - x).
GridFunction reflect(const GridFunction& u, double a);

/// σ_a u(x) = u(x + a).
GridFunction translate_space(const GridFunction& u, double a);

struct MaxValue {
  double value;
  double argmax;
};

/// max_x u(x): best of the grid values, then a Newton polish on the interpolant.
MaxValue max_value(const GridFunction& u);

double norm_sup(const GridFunction& u);
/// Discrete L²: sqrt((1/N) Σ u_j²).
double norm_l2(const GridFunction& u);
/// ‖u‖₂ + ‖u_x‖₂.
double norm_h1(const GridFunction& u);
/// ‖u‖∞ + ‖u_x‖∞ on the grid.
double norm_c1(const GridFunction& u);
double distance_c1(const GridFunction& u, const GridFunction& v);

/// Discrete L² inner product (1/N) Σ u_j v_j computed from coefficients.
double inner_product(std::span<const std::complex<double>> a, std::span<const std::complex<double>> b,
                     std::size_t n);

}  // namespace rdcircle
