#pragma once

// Persistence: trajectory CSV, report JSON with fixed-precision numbers, and
// gnuplot-ready column files.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rdcircle/solver.hpp"
#include "rdcircle/variational.hpp"
#include "rdcircle/zero_number.hpp"

namespace rdcircle {

/// printf("%.12e").
std::string format_double(double v);

/// Copy of j with every floating-point number rounded through "%.12e".
nlohmann::json rounded(const nlohmann::json& j);

/// rounded(j).dump(2) plus a trailing newline.
std::string dump_report(const nlohmann::json& j);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Header "t,u_0,...,u_{N-1}", one row per stored sample.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);

struct StoredTrajectory {
  std::vector<double> t;
  std::vector<std::vector<double>> values;
};

/// Throws std::runtime_error on malformed input.
StoredTrajectory read_trajectory_csv(std::istream& in);

/// Header "t,count,simple,status".
void write_lap_csv(const LapReport& report, std::ostream& out);

struct LapSeries {
  std::vector<double> t;
  std::vector<std::size_t> count;
  std::vector<std::string> status;
};

LapSeries read_lap_csv(std::istream& in);

/// "t u_0 ... u_{N-1}" per sample (N + 1 columns).
std::string plot_field(const StoredTrajectory& traj);
/// "t u(t, x0)" from the spectral interpolant of each stored row.
std::string plot_section(const StoredTrajectory& traj, double x0);
/// "t λ_1 ... λ_m" from the running exponents.
std::string plot_convergence(const SpectrumEstimate& s);
/// "t count" for certified samples.
std::string plot_lap(const LapSeries& lap);

}  // namespace rdcircle
