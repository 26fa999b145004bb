#pragma once

// Zero number z(u) = card{x ∈ S¹ : u(x) = 0} with simple-zero certification,
// and the lap-number monitor along differences of two trajectories.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rdcircle/grid_function.hpp"
#include "rdcircle/solver.hpp"

namespace rdcircle {

struct ZeroCount {
  std::size_t count = 0;
  bool simple = true;
  std::vector<double> locations;  // increasing, in [0, 2π)
  double margin = 0.0;            // smallest |u_x| over certified zeros, 0 if non-simple
};

/// Zeros of the spectral interpolant, bracketed on a 4N grid and polished.
/// A zero is simple iff |u_x| > tol_slope there; |u| < tol_val on an interval
/// or a touching zero makes the count non-simple.
/// Throws std::domain_error("numerically zero function") when ‖u‖∞ < tol_val.
ZeroCount zero_count(const GridFunction& u, double tol_val, double tol_slope);

/// δ > 0 with z(u + v) = z(u) whenever ‖v‖_{C¹} < δ.
/// Throws std::domain_error("no stable radius") for non-simple zeros.
double perturbation_radius(const GridFunction& u);

struct LapTolerances {
  double rel_val = 1e-9;    // tol_val = rel_val · ‖w‖∞
  double rel_slope = 1e-6;  // tol_slope = rel_slope · ‖w‖∞
  double collapse = 1e-8;   // ‖w‖∞ below collapse · max(1, ‖u₁‖∞) counts as collapsed
  double witness_factor = 10.0;
  std::size_t max_refine = 20;  // extra bisection steps per drop
};

struct DropEvent {
  double t_lo = 0.0;
  double t_hi = 0.0;
  std::size_t before = 0;
  std::size_t after = 0;
  std::optional<double> witness;  // x where |w| and |w_x| are both small
  double witness_value = 0.0;
  double witness_slope = 0.0;
  bool witness_ok = false;
};

enum class LapStatus { certified, indeterminate, collapsed };

struct LapSample {
  double t = 0.0;
  std::size_t count = 0;
  bool simple = false;
  LapStatus status = LapStatus::indeterminate;
};

struct LapReport {
  std::vector<LapSample> samples;
  std::vector<DropEvent> drops;
  std::vector<std::size_t> increases;     // sample indices where a certified count went up
  std::vector<std::size_t> uncertifiable;  // indeterminate samples with no drop across them

  bool monotone() const { return increases.empty(); }
  bool all_witnessed() const;
};

/// z(φ₁(t_i) − φ₂(t_i)) along two trajectories of the same field and grid.
/// Throws std::invalid_argument for mismatched or identical trajectories.
LapReport lap_monitor(const Trajectory& a, const Trajectory& b, const LapTolerances& tols = {});

std::string to_string(LapStatus s);
void to_json(nlohmann::json& j, const DropEvent& e);

}  // namespace rdcircle
