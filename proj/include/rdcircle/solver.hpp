#pragma once

// Pseudospectral ETDRK4 integration of u_t = D u_xx + f(t, u, u_x) on S¹ and
// the skew-product semiflow Π^t(u, g) = (φ(t, ·; u, g), g·t).

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "rdcircle/forcing.hpp"
#include "rdcircle/grid_function.hpp"

namespace rdcircle {

struct SolverConfig {
  std::size_t n = 64;
  double dt = 1e-3;
  bool dealias = false;  // 2/3 rule on the nonlinear term
  double blowup_threshold = 1e6;
  std::size_t qr_interval = 10;  // tangent reorthonormalization period, in steps
  double diffusion = 1.0;        // D; anything but 1 is a test fixture

  bool operator==(const SolverConfig&) const = default;
};

void validate(const SolverConfig& config);
void to_json(nlohmann::json& j, const SolverConfig& c);
void from_json(const nlohmann::json& j, SolverConfig& c);

class BlowUpError : public std::runtime_error {
 public:
  explicit BlowUpError(double t);
  double time() const { return time_; }

 private:
  double time_;
};

struct TrajectorySample {
  double t = 0.0;
  GridFunction state;
  std::vector<double> hull_phase;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  SolverConfig config;
  ForcingField field;  // the hull point g at t = 0
  std::size_t sample_stride = 1;

  double t_end() const { return samples.empty() ? 0.0 : samples.back().t; }
};

/// Uniform steps of size dt followed by one shorter step landing on t_end.
struct StepSchedule {
  std::size_t full_steps = 0;
  double last_step = 0.0;  // 0 when t_end is a multiple of dt

  std::size_t total() const { return full_steps + (last_step > 0.0 ? 1 : 0); }
};

StepSchedule make_schedule(double duration, double dt);

/// hull phase of g·t.
std::vector<double> hull_phase_at(const ForcingField& field, double t);

/// ETDRK4 (Cox–Matthews) with exact diffusion factors and contour-integral
/// φ-function coefficients. Owns its scratch buffers: one per worker.
///
/// advance() optionally carries tangent vectors: each is stepped with the
/// linearization of every Runge–Kutta stage at the corresponding base stage,
/// i.e. with the exact derivative of the discrete step map.
class EtdStepper {
 public:
  EtdStepper(ForcingField field, SolverConfig config);

  const SolverConfig& config() const { return config_; }
  const ForcingField& field() const { return field_; }

  void advance(Spectrum& u, double t, double h, std::span<Spectrum> tangents = {});

  /// One step with the blow-up check; throws BlowUpError.
  GridFunction step(const GridFunction& u, double t, double h);

  /// Exact ‖u‖∞ unless a cheap coefficient bound already clears the threshold.
  bool exceeds_threshold(const Spectrum& u);

 private:
  struct Coefficients {
    double h = 0.0;
    std::vector<double> e, e2, q, f1, f2, f3;
  };

  const Coefficients& coefficients(double h);
  void evaluate_stage(double t, std::size_t stage, std::size_t count);
  void project(Spectrum& s) const;

  ForcingField field_;
  SolverConfig config_;
  std::size_t modes_;
  std::size_t dealias_cutoff_;
  bool linear_;
  bool gradient_;

  Coefficients main_;
  Coefficients other_;

  // per-stage states and their nonlinear terms, index 0 is the base
  std::vector<Spectrum> state_[4];
  std::vector<Spectrum> nonlin_[4];
  std::vector<double> u_, ux_, f_, gu_, gp_, w_;
  Spectrum tmp_;

  // last two evaluations of the linear rate (stages share times)
  double rate_t_[2] = {-1.0, -1.0};
  double rate_v_[2] = {0.0, 0.0};
  bool rate_ok_[2] = {false, false};
  std::size_t rate_next_ = 0;
};

/// One exponential-integrator step of u_t = u_xx + g(t, u, u_x).
GridFunction step(const GridFunction& u, const ForcingField& field, double t, double dt,
                  const SolverConfig& config = {});

/// Repeated steps from t = 0 to t_end, sampling every `sample_stride` steps
/// (always including t = 0 and t = t_end).
Trajectory evolve(const GridFunction& u0, const ForcingField& field, double t_end, const SolverConfig& config,
                  std::size_t sample_stride);

/// Integrates from (u, t0) to t1 with the config step size.
GridFunction propagate(EtdStepper& stepper, const GridFunction& u, double t0, double t1);

}  // namespace rdcircle
