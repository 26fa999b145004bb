#pragma once

// Linearized flow v_t = v_xx + a(x,t) v_x + b(x,t) v along a trajectory:
// tangent frames, finite-time Lyapunov exponents, dimension counts and the
// explicit sin/cos Floquet modes along spatially homogeneous orbits.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rdcircle/forcing.hpp"
#include "rdcircle/grid_function.hpp"
#include "rdcircle/solver.hpp"

namespace rdcircle {

struct LinearCoefficients {
  GridFunction a;  // ∂f/∂p, multiplies v_x
  GridFunction b;  // ∂f/∂u, multiplies v
  double t = 0.0;
};

LinearCoefficients linearize(const ForcingField& field, const GridFunction& u, double t);

struct TangentFrame {
  std::vector<GridFunction> vectors;
  std::vector<double> log_growth;
  double t = 0.0;

  std::size_t size() const { return vectors.size(); }
};

/// m orthonormal band-limited vectors drawn from a seeded generator.
TangentFrame random_frame(std::size_t n, std::size_t m, std::uint64_t seed);

/// Largest |<v_i, v_j> - δ_ij| in the discrete L² product.
double gram_deviation(const TangentFrame& frame);

/// Advances the frame along the whole trajectory (re-integrating the base
/// from its first sample), reorthonormalizing every qr_interval steps and
/// accumulating per-direction log-growth. Throws std::runtime_error on collapse.
TangentFrame evolve_tangent(const Trajectory& traj, TangentFrame frame, std::size_t qr_interval);

struct SpectrumEstimate {
  std::vector<double> exponents;  // descending
  double horizon = 0.0;
  double transient = 0.0;
  double gap_tol = 0.1;
  std::size_t dim_u = 0;
  std::size_t dim_c = 0;
  std::size_t n_u = 0;  // dim_u rounded up to even
  std::vector<std::pair<double, double>> intervals;
  std::vector<std::pair<double, std::vector<double>>> convergence;  // (t, running exponents)
};

struct SpectrumOptions {
  double gap_tol = 0.1;
  double transient_fraction = 0.1;
  std::size_t windows = 8;  // over the last half of the horizon
  std::size_t history = 64;
  std::uint64_t seed = 1;
};

/// Exponents from log-growth accumulated over [transient, horizon].
/// Throws std::invalid_argument("insufficient horizon") below 100 QR cycles.
SpectrumEstimate lyapunov_spectrum(const Trajectory& traj, std::size_t m, double horizon,
                                   const SpectrumOptions& options = {});

/// dim_u, dim_c and N_u from exponents and a gap tolerance.
void assign_dimensions(SpectrumEstimate& s);

enum class Parity { cosine, sine };

struct FloquetMode {
  std::size_t k = 0;
  Parity parity = Parity::cosine;
  double exponent = 0.0;
  std::vector<std::pair<double, double>> drift;  // (t, c(t)) with ċ = -a(t)
};

/// Throws std::invalid_argument when the trajectory is not spatially homogeneous.
std::vector<FloquetMode> floquet_homogeneous(const ForcingField& field, const Trajectory& traj, std::size_t k_max,
                                             double horizon, double transient_fraction = 0.1);

struct CrosscheckReport {
  std::vector<double> floquet;
  std::vector<double> lyapunov;
  double max_discrepancy = 0.0;
  double max_drift = 0.0;
};

CrosscheckReport floquet_vs_frame_crosscheck(const Trajectory& traj, std::size_t k_max, double horizon,
                                             const SpectrumOptions& options = {});

/// Same comparison against an already computed spectrum of the trajectory.
CrosscheckReport floquet_vs_frame_crosscheck(const Trajectory& traj, std::size_t k_max,
                                             const SpectrumEstimate& spectrum);

void to_json(nlohmann::json& j, const SpectrumOptions& o);
void from_json(const nlohmann::json& j, SpectrumOptions& o);
void to_json(nlohmann::json& j, const SpectrumEstimate& s);
void from_json(const nlohmann::json& j, SpectrumEstimate& s);

}  // namespace rdcircle
