#pragma once

// Thin wrapper over FFTW real transforms with a per-size plan cache.

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace rdcircle {

/// Real-to-complex transforms of length n (n/2 + 1 complex outputs).
/// Coefficients are normalized so that forward() returns û_k = (1/n) Σ u_j e^{-ikx_j}
/// and inverse() reconstructs the samples exactly.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  std::size_t modes() const { return n_ / 2 + 1; }

  void forward(std::span<const double> in, std::span<std::complex<double>> out);

  /// `in` is left untouched.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  struct Impl;
  std::size_t n_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace rdcircle
