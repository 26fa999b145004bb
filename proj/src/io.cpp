#include "rdcircle/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rdcircle/grid_function.hpp"

namespace rdcircle {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

nlohmann::json rounded(const nlohmann::json& j) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (!std::isfinite(v)) return nullptr;
    return std::stod(format_double(v));
  }
  if (j.is_array() || j.is_object()) {
    nlohmann::json out = j;
    for (auto it = out.begin(); it != out.end(); ++it) *it = rounded(*it);
    return out;
  }
  return j;
}

std::string dump_report(const nlohmann::json& j) { return rounded(j).dump(2) + "\n"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  const std::size_t n = traj.samples.empty() ? traj.config.n : traj.samples.front().state.size();
  out << "t";
  for (std::size_t j = 0; j < n; ++j) out << ",u_" << j;
  out << '\n';
  for (const auto& s : traj.samples) {
    out << format_double(s.t);
    for (double v : s.state.values()) out << ',' << format_double(v);
    out << '\n';
  }
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) out.push_back(cell);
  return out;
}

double parse_number(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::runtime_error("malformed number: " + s);
  return v;
}

}  // namespace

StoredTrajectory read_trajectory_csv(std::istream& in) {
  StoredTrajectory out;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trajectory file");
  const auto header = split(line, ',');
  if (header.size() < 2 || header.front() != "t") throw std::runtime_error("not a trajectory file");
  const std::size_t n = header.size() - 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != n + 1) throw std::runtime_error("ragged trajectory row");
    try {
      out.t.push_back(parse_number(cells[0]));
      std::vector<double> row(n);
      for (std::size_t j = 0; j < n; ++j) row[j] = parse_number(cells[j + 1]);
      out.values.push_back(std::move(row));
    } catch (const std::invalid_argument&) {
      throw std::runtime_error("malformed trajectory row");
    }
  }
  return out;
}

void write_lap_csv(const LapReport& report, std::ostream& out) {
  out << "t,count,simple,status\n";
  for (const auto& s : report.samples)
    out << format_double(s.t) << ',' << s.count << ',' << (s.simple ? 1 : 0) << ',' << to_string(s.status) << '\n';
}

LapSeries read_lap_csv(std::istream& in) {
  LapSeries out;
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,count", 0) != 0) throw std::runtime_error("not a lap file");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 4) throw std::runtime_error("malformed lap row");
    out.t.push_back(parse_number(cells[0]));
    out.count.push_back(std::stoul(cells[1]));
    out.status.push_back(cells[3]);
  }
  return out;
}

std::string plot_field(const StoredTrajectory& traj) {
  std::ostringstream os;
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    os << format_double(traj.t[i]);
    for (double v : traj.values[i]) os << ' ' << format_double(v);
    os << '\n';
  }
  return os.str();
}

std::string plot_section(const StoredTrajectory& traj, double x0) {
  std::ostringstream os;
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    const auto u = GridFunction::from_values(traj.values[i]);
    os << format_double(traj.t[i]) << ' ' << format_double(u(x0)) << '\n';
  }
  return os.str();
}

std::string plot_convergence(const SpectrumEstimate& s) {
  std::ostringstream os;
  for (const auto& [t, e] : s.convergence) {
    os << format_double(t);
    for (double v : e) os << ' ' << format_double(v);
    os << '\n';
  }
  return os.str();
}

std::string plot_lap(const LapSeries& lap) {
  std::ostringstream os;
  for (std::size_t i = 0; i < lap.t.size(); ++i)
    if (lap.status[i] == "certified") os << format_double(lap.t[i]) << ' ' << lap.count[i] << '\n';
  return os.str();
}

}  // namespace rdcircle
