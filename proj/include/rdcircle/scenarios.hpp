#pragma once

// Canned experiments: forcing field, initial data, solver settings, an
// optional closed-form solution and the expected analysis outcomes.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rdcircle/forcing.hpp"
#include "rdcircle/grid_function.hpp"
#include "rdcircle/omega_limit.hpp"
#include "rdcircle/solver.hpp"
#include "rdcircle/variational.hpp"

namespace rdcircle {

/// u0(x) = mean + Σ_k a_k cos kx + b_k sin kx, k = 1, 2, ...
struct InitialData {
  double mean = 0.0;
  std::vector<double> cos_coeffs;
  std::vector<double> sin_coeffs;

  /// Exact Fourier coefficients on an n-point grid (no sampling roundoff, so
  /// a zero mean stays exactly zero).
  GridFunction build(std::size_t n) const;
  double operator()(double x) const;
  std::size_t max_mode() const { return std::max(cos_coeffs.size(), sin_coeffs.size()); }

  bool operator==(const InitialData&) const = default;
};

/// Seeded draws: mean uniform in [mean_lo, mean_hi], a_k, b_k uniform in
/// [-amplitude/k, amplitude/k] for k ≤ k_max.
struct RandomInitialData {
  double mean_lo = 0.0;
  double mean_hi = 0.0;
  double amplitude = 0.1;
  std::size_t k_max = 3;

  InitialData draw(std::uint64_t seed) const;
  bool operator==(const RandomInitialData&) const = default;
};

struct OmegaPlan {
  SolverConfig config;
  double t_end = 0.0;
  double t_transient = 0.0;
  std::size_t stride = 1;  // solver steps between snapshots
  OmegaTolerances tolerances;
};

struct SpectrumPlan {
  SolverConfig config;
  InitialData base;  // state the linearization is taken along
  std::size_t m = 5;
  double horizon = 0.0;
  std::size_t k_max = 2;  // Floquet modes compared when the base is homogeneous
  SpectrumOptions options;
};

struct Expectations {
  std::vector<double> spectrum;
  double spectrum_tol = 0.05;
  std::optional<std::size_t> dim_u, dim_c, n_u;
  std::optional<bool> homogeneous;
  std::optional<std::size_t> minimal_set_count;
  std::size_t max_minimal_sets = 2;
  std::optional<bool> connecting;
  std::optional<Trichotomy> trichotomy;
  std::optional<std::string> implication_rule;
};

using Oracle = std::function<double(double t, double x)>;

struct Scenario {
  std::string name;
  std::string description;
  bool reference = true;  // false for plumbing scenarios with invented expectations
  ForcingField field;
  InitialData u0;
  RandomInitialData random_u0;
  SolverConfig config;
  double t_end = 10.0;
  OmegaPlan omega;
  SpectrumPlan spectrum;
  Expectations expected;
  Oracle oracle;  // empty when no closed form is known

  GridFunction initial(std::size_t n) const { return u0.build(n); }
};

/// Closed-form mode-by-mode solution for scalar_linear fields:
/// c_k(t) = c_k(0)·exp(-D k² t - λ t + ∫_0^t s).
Oracle linear_oracle(const ForcingField& field, const InitialData& u0, double diffusion = 1.0);

/// max |φ_t - φ_xx - f(t, φ, φ_x)| at `points` seeded (t, x) in [0, t_max] × S¹,
/// with φ_t from a five-point stencil and φ_xx from the spectral interpolant.
double oracle_residual(const Scenario& s, std::size_t points = 100, std::uint64_t seed = 7, double t_max = 10.0);

/// Attaches the closed form when one exists and self-checks it; throws
/// std::runtime_error when the residual exceeds 1e-6.
void attach_oracle(Scenario& s);

/// λ ∈ {0, -1}; cosine selects u0 = cos x instead of sin x for λ = -1.
Scenario ex61(double lambda, bool cosine = false);
Scenario ex62(QuasiPeriodicSum a, QuasiPeriodicSum b);
/// a = 0.5 + 0.3 sin t + 0.2 sin(√2 t + 1), b = 0.3 sin √2 t + 0.2 sin √5 t.
Scenario ex62();
Scenario bistable();
Scenario heat();

std::vector<std::string> scenario_names();
/// Throws std::invalid_argument("unknown scenario: ...").
Scenario make_scenario(const std::string& name);

struct OdeSeries {
  std::vector<double> t;
  std::vector<double> y;
  bool diverged = false;
};

/// Classical RK4 for y' = a(t) y + b(t); stops with the divergence flag once |y| > 1e12.
OdeSeries ode_scalar_solve(const QuasiPeriodicSum& a, const QuasiPeriodicSum& b, double y0, double t_end, double dt);

void to_json(nlohmann::json& j, const InitialData& d);
void from_json(const nlohmann::json& j, InitialData& d);
void to_json(nlohmann::json& j, const RandomInitialData& d);
void from_json(const nlohmann::json& j, RandomInitialData& d);
void to_json(nlohmann::json& j, const OmegaPlan& p);
void from_json(const nlohmann::json& j, OmegaPlan& p);
void to_json(nlohmann::json& j, const SpectrumPlan& p);
void from_json(const nlohmann::json& j, SpectrumPlan& p);
void to_json(nlohmann::json& j, const Expectations& e);
void from_json(const nlohmann::json& j, Expectations& e);
void to_json(nlohmann::json& j, const Scenario& s);
/// Rebuilds the oracle from the field, so edited scenarios keep their self-check.
void from_json(const nlohmann::json& j, Scenario& s);

}  // namespace rdcircle
