#pragma once

// Approximate ω-limit sets from long trajectories: common critical point,
// spatial homogeneity, hull fibers, minimal-set clusters, 1-cover estimates,
// proximality and the trichotomy classification.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rdcircle/forcing.hpp"
#include "rdcircle/grid_function.hpp"
#include "rdcircle/solver.hpp"
#include "rdcircle/variational.hpp"

namespace rdcircle {

struct OmegaSnapshot {
  double t = 0.0;
  GridFunction state;
  std::vector<double> hull_phase;
};

struct OmegaSample {
  std::vector<OmegaSnapshot> snapshots;
  double t_transient = 0.0;
  SolverConfig config;
  ForcingField field;

  std::size_t size() const { return snapshots.size(); }
};

struct OmegaTolerances {
  double hull_tol = 0.05;    // weighted wrap-around phase distance
  double fiber_tol = 1e-3;   // C¹ resolution inside a fiber
  double t_min = 10.0;       // minimum time separation of a return
  double gap_factor = 10.0;  // split gap must exceed this × within-cluster spread
  double syndetic_fraction = 0.25;  // largest allowed return gap, as a fraction of the window
  std::size_t min_members = 10;
  double critical_tol = 1e-4;
  double homogeneity_tol = 1e-6;
  std::size_t coverage_probes = 256;
  std::uint64_t seed = 1;

  bool operator==(const OmegaTolerances&) const = default;
};

void to_json(nlohmann::json& j, const OmegaTolerances& t);
void from_json(const nlohmann::json& j, OmegaTolerances& t);

/// Keeps samples with t > t_transient whose index is a multiple of
/// stride / traj.sample_stride. Throws std::invalid_argument when the
/// trajectory is shorter than 2·t_transient or the stride is not a multiple of
/// the stored sample stride, std::runtime_error("no bounded ω-limit") on
/// non-finite or oversized states.
OmegaSample sample_omega(const Trajectory& traj, double t_transient, std::size_t stride);

struct CriticalPoint {
  std::optional<double> x0;
  bool every_point = false;  // homogeneous sample: any x qualifies
  double max_slope = 0.0;    // max over snapshots of |u_x(x0)| (best candidate if none qualifies)
  double best_x = 0.0;
};

/// Minimizer of max_i |u_x^i(x)| over a 4N grid, polished between neighbours.
CriticalPoint find_common_critical_point(const OmegaSample& s, double tol);

/// max_i ‖u_x^i‖∞ < tol.
bool homogeneity_test(const OmegaSample& s, double tol);

struct FiberStats {
  std::vector<double> base_phase;
  std::size_t base_index = 0;
  std::vector<std::size_t> members;
  double diameter = 0.0;
  std::pair<double, double> value_range{0.0, 0.0};  // [m(g), M(g)] of u(x0)
  std::vector<std::pair<double, double>> clusters;  // recurrent section-value clusters
  std::size_t recurrent_members = 0;
  bool well_populated = false;
};

struct MinimalSetResult {
  std::size_t count = 0;
  bool connecting_detected = false;
  std::vector<FiberStats> fibers;
  std::vector<bool> recurrent;           // per snapshot
  std::vector<std::size_t> connecting;  // snapshot indices outside every cluster of their fiber
};

/// Section values u(x0) per hull fiber, clustered over recurrent snapshots.
/// A snapshot is recurrent when its near-returns (hull distance < hull_tol,
/// |Δt| > t_min, C¹ distance < fiber_tol) exist and leave no gap longer than
/// syndetic_fraction of the sampled window.
/// Throws std::runtime_error("insufficient recurrence sampling").
MinimalSetResult count_minimal_sets(const OmegaSample& s, double x0, const OmegaTolerances& tols);

struct CoverResult {
  std::size_t cardinality = 0;
  double coverage = 0.0;  // fraction of probe hull points within hull_tol of a snapshot
};

/// C¹ clusters (single linkage at fiber_tol) among recurrent fiber members,
/// maximized over well-populated fibers.
CoverResult cover_test(const OmegaSample& s, const MinimalSetResult& fibers, const OmegaTolerances& tols);

struct ProximalResult {
  bool two_sided = false;
  std::size_t forward_dips = 0;
  std::size_t backward_dips = 0;
  double forward_min = 0.0;
  double backward_min = 0.0;
};

/// C¹ distance of paired samples: dips over the late third (forward) and the
/// early third (backward, from stored history only).
/// Throws std::invalid_argument for mismatched or identical trajectories.
ProximalResult proximal_pair_scan(const Trajectory& a, const Trajectory& b, double tol);

/// Probe points whose sign of u_x keeps changing over the sampled tail
/// (|u_x| < dead_band counts as no sign).
std::vector<double> unstable_sign_probes(const OmegaSample& s, std::size_t probes, double dead_band);

/// max_i ‖ρ_{x0} u_i − u_i‖∞.
double reflection_defect(const OmegaSample& s, double x0);

enum class Trichotomy { minimal, one_minimal_connecting, two_minimal_connecting, undetermined };

std::string to_string(Trichotomy t);

/// Case from the minimal-set count and connecting evidence alone.
Trichotomy trichotomy_case(std::size_t count, bool connecting);

struct ImplicationFlag {
  std::string rule;  // "a", "b", "c" or "none"
  bool applicable = false;
  bool passed = true;
  std::string detail;
};

struct FalsificationEvent {
  std::string kind;
  std::string detail;
  std::vector<std::size_t> snapshots;
};

struct OmegaAnalysis {
  CriticalPoint critical;
  bool homogeneous = false;
  MinimalSetResult minimal;
  CoverResult cover;
  OmegaTolerances tolerances;
  bool symmetric = true;
};

/// Runs every component analysis on the sample.
OmegaAnalysis analyze_omega(const OmegaSample& s, const OmegaTolerances& tols);

struct OmegaReport {
  std::optional<double> x0;
  bool x0_every_point = false;
  double x0_max_slope = 0.0;
  bool homogeneous = false;
  std::size_t minimal_set_count = 0;
  bool connecting_detected = false;
  std::size_t cover_cardinality = 0;
  double fiber_coverage = 0.0;
  std::size_t fibers = 0;
  std::size_t snapshots = 0;
  Trichotomy trichotomy = Trichotomy::undetermined;
  std::size_t dim_u = 0;
  std::size_t dim_c = 0;
  ImplicationFlag implication;
  std::vector<FalsificationEvent> falsifications;
  OmegaTolerances tolerances;
  std::string evidence = "forward";  // connecting evidence comes from the sampled forward orbit

  bool flags_pass() const { return implication.passed && falsifications.empty(); }
};

OmegaReport classify(const OmegaAnalysis& analysis, const SpectrumEstimate& spectrum);

/// One line per falsification event, with snapshot indices.
void emit_diagnostics(const OmegaReport& report, std::ostream& out);

void to_json(nlohmann::json& j, const OmegaReport& r);

}  // namespace rdcircle
