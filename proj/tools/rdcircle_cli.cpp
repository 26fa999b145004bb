// Command-line front end: simulate, spectrum, omega, verify, export-plot,
// list-scenarios. Exit status 0 = pass, 1 = check failures, 2 = runtime error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rdcircle/harness.hpp"
#include "rdcircle/io.hpp"
#include "rdcircle/omega_limit.hpp"
#include "rdcircle/scenarios.hpp"
#include "rdcircle/solver.hpp"
#include "rdcircle/zero_number.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rdcircle;

namespace {

struct Common {
  std::string config_file;
  std::optional<std::string> scenario;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  bool random_initial = false;
  Overrides overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_file, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--scenario", c.scenario, "catalog scenario name");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--seed", c.seed, "seed for every randomized choice");
  cmd->add_flag("--random-initial", c.random_initial, "draw u0 from the scenario's random family");
  cmd->add_option("--n", c.overrides.n, "grid size (power of two)");
  cmd->add_option("--dt", c.overrides.dt, "time step");
  cmd->add_option("--t-end", c.overrides.t_end, "final time");
  cmd->add_option("--t-transient", c.overrides.t_transient, "discarded transient for omega sampling");
  cmd->add_option("--stride", c.overrides.stride, "solver steps between stored samples");
  cmd->add_option("--horizon", c.overrides.horizon, "spectrum horizon");
  cmd->add_option("--m", c.overrides.m, "number of Lyapunov exponents");
}

RunConfig load_config(const Common& c) {
  RunConfig cfg;
  if (!c.config_file.empty()) cfg = json::parse(read_text(c.config_file)).get<RunConfig>();
  if (c.scenario) {
    cfg.scenario = *c.scenario;
    cfg.inline_scenario = nullptr;
  }
  if (c.out) cfg.out = *c.out;
  if (c.seed) cfg.seed = *c.seed;
  if (c.random_initial) cfg.random_initial = true;
  const auto& o = c.overrides;
  if (o.n) cfg.overrides.n = o.n;
  if (o.dt) cfg.overrides.dt = o.dt;
  if (o.t_end) cfg.overrides.t_end = o.t_end;
  if (o.t_transient) cfg.overrides.t_transient = o.t_transient;
  if (o.stride) cfg.overrides.stride = o.stride;
  if (o.horizon) cfg.overrides.horizon = o.horizon;
  if (o.m) cfg.overrides.m = o.m;
  return cfg;
}

json metadata(const RunConfig& cfg, const Scenario& s) { return json{{"run_config", cfg}, {"scenario", s}}; }

int cmd_simulate(const Common& common, bool lap_pair) {
  const auto cfg = load_config(common);
  const auto s = resolve(cfg);
  const fs::path out = cfg.out;
  const std::size_t total = make_schedule(s.t_end, s.config.dt).total();
  const std::size_t stride = cfg.overrides.stride.value_or(std::max<std::size_t>(1, total / 500));
  const auto traj = evolve(s.initial(s.config.n), s.field, s.t_end, s.config, stride);
  {
    std::ostringstream os;
    write_trajectory_csv(traj, os);
    write_text(out / "trajectory.csv", os.str());
  }
  auto meta = metadata(cfg, s);
  meta["samples"] = traj.samples.size();
  meta["sample_stride"] = stride;
  if (lap_pair) {
    const auto partner = s.random_u0.draw(cfg.seed + 1);
    const auto other = evolve(partner.build(s.config.n), s.field, s.t_end, s.config, stride);
    const auto lap = lap_monitor(traj, other);
    std::ostringstream os;
    write_lap_csv(lap, os);
    write_text(out / "lap.csv", os.str());
    json drops = json::array();
    for (const auto& d : lap.drops) drops.push_back(d);
    write_text(out / "lap_drops.json", dump_report(json{{"partner_u0", partner},
                                                         {"drops", drops},
                                                         {"increases", lap.increases},
                                                         {"uncertifiable", lap.uncertifiable}}));
    meta["lap_monotone"] = lap.monotone();
  }
  write_text(out / "metadata.json", dump_report(meta));
  std::cout << "wrote " << (out / "trajectory.csv").string() << " (" << traj.samples.size() << " samples)\n";
  return 0;
}

int cmd_spectrum(const Common& common, bool plots) {
  const auto cfg = load_config(common);
  const auto s = resolve(cfg);
  const fs::path out = cfg.out;
  const auto run = run_spectrum(s);
  const auto mismatches = spectrum_mismatches(s.expected, run.estimate);
  json report = run.estimate;
  report["scenario"] = s.name;
  report["m"] = s.spectrum.m;
  report["expected"] = s.expected.spectrum;
  report["expected_tol"] = s.expected.spectrum_tol;
  report["within_tolerance"] = mismatches.empty();
  report["mismatches"] = mismatches;
  if (run.crosscheck) {
    const auto& c = *run.crosscheck;
    report["crosscheck"] = {{"floquet", c.floquet}, {"lyapunov", c.lyapunov}, {"max_discrepancy", c.max_discrepancy}};
  } else {
    report["crosscheck"] = nullptr;
  }
  write_text(out / "spectrum.json", dump_report(report));
  if (plots || cfg.plots) write_text(out / "convergence.dat", plot_convergence(run.estimate));
  for (double e : run.estimate.exponents) std::cout << format_double(e) << '\n';
  for (const auto& m : mismatches) std::cerr << m << '\n';
  return mismatches.empty() ? 0 : 1;
}

int cmd_omega(const Common& common, bool save_trajectory) {
  const auto cfg = load_config(common);
  const auto s = resolve(cfg);
  const fs::path out = cfg.out;
  const auto run = run_omega(s, s.u0);
  const auto spec = run_spectrum(s);
  const auto report = classify(run.analysis, spec.estimate);
  json j = report;
  j["scenario"] = s.name;
  write_text(out / "omega.json", dump_report(j));
  if (save_trajectory) {
    std::ostringstream os;
    os << "t";
    const std::size_t n = run.sample.snapshots.empty() ? 0 : run.sample.snapshots.front().state.size();
    for (std::size_t k = 0; k < n; ++k) os << ",u_" << k;
    os << '\n';
    for (const auto& snap : run.sample.snapshots) {
      os << format_double(snap.t);
      for (double v : snap.state.values()) os << ',' << format_double(v);
      os << '\n';
    }
    write_text(out / "omega_trajectory.csv", os.str());
  }
  emit_diagnostics(report, std::cerr);
  std::cout << "case " << to_string(report.trichotomy) << ", minimal sets " << report.minimal_set_count
            << ", homogeneous " << (report.homogeneous ? "yes" : "no") << ", rule " << report.implication.rule
            << '\n';
  return report.flags_pass() ? 0 : 1;
}

int cmd_verify(bool full, std::uint64_t seed, const std::string& out, const std::vector<std::string>& only,
               std::size_t jobs, std::optional<double> diffusion) {
  VerifyOptions o;
  o.suite = full ? Suite::full : Suite::quick;
  o.seed = seed;
  o.only = only;
  o.jobs = jobs;
  o.diffusion = diffusion;
  const auto report = run_verify(o);
  json j = report;
  write_text(fs::path(out) / "verify_report.json", dump_report(j));
  std::cout << summary_text(report);
  return report.ok() ? 0 : 1;
}

int cmd_export(const std::string& input, const std::string& kind, double x0, const std::string& out) {
  std::string text;
  if (kind == "field" || kind == "section") {
    std::ifstream in(input);
    if (!in) throw std::runtime_error("cannot read " + input);
    const auto traj = read_trajectory_csv(in);
    text = kind == "field" ? plot_field(traj) : plot_section(traj, x0);
  } else if (kind == "convergence") {
    text = plot_convergence(json::parse(read_text(input)).get<SpectrumEstimate>());
  } else if (kind == "lap") {
    std::ifstream in(input);
    if (!in) throw std::runtime_error("cannot read " + input);
    text = plot_lap(read_lap_csv(in));
  } else {
    throw std::invalid_argument("unknown plot kind: " + kind);
  }
  if (out.empty()) std::cout << text;
  else write_text(out, text);
  return 0;
}

int cmd_list(bool as_json) {
  if (as_json) {
    json all = json::array();
    for (const auto& name : scenario_names()) all.push_back(make_scenario(name));
    std::cout << dump_report(all);
    return 0;
  }
  for (const auto& name : scenario_names()) {
    const auto s = make_scenario(name);
    std::cout << name << (s.reference ? "" : "  [plumbing]") << "  " << s.description << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reaction-diffusion on the circle: simulation, spectra and omega-limit analysis"};
  app.require_subcommand(1);

  Common sim_opts, spec_opts, omega_opts;
  bool lap_pair = false, plots = false, save_traj = false;

  auto* sim = app.add_subcommand("simulate", "integrate a scenario and write trajectory CSV + metadata");
  add_common(sim, sim_opts);
  sim->add_flag("--lap-pair", lap_pair, "also track the zero number against a second random initial datum");

  auto* spec = app.add_subcommand("spectrum", "Lyapunov spectrum with Floquet cross-check");
  add_common(spec, spec_opts);
  spec->add_flag("--plots", plots, "write exponent convergence columns");

  auto* omega = app.add_subcommand("omega", "sample the omega-limit set and classify it");
  add_common(omega, omega_opts);
  omega->add_flag("--save-trajectory", save_traj, "write the sampled snapshots as CSV");

  bool quick = false, full = false;
  std::uint64_t vseed = 1;
  std::string vout = "out";
  std::vector<std::string> only;
  std::size_t jobs = 0;
  std::optional<double> diffusion;
  auto* ver = app.add_subcommand("verify", "run the acceptance checks");
  auto* q = ver->add_flag("--quick", quick, "reduced sample counts (default)");
  ver->add_flag("--full", full, "full sample counts")->excludes(q);
  ver->add_option("--seed", vseed, "suite seed");
  ver->add_option("--out", vout, "output directory");
  ver->add_option("--only", only, "check ids, e.g. AC01 AC07")->delimiter(',');
  ver->add_option("--jobs", jobs, "worker threads (0 = all cores)");
  ver->add_option("--diffusion", diffusion, "override D in every solver run (fault injection)");

  std::string input, kind, plot_out;
  double x0 = kPi / 2.0;
  auto* exp = app.add_subcommand("export-plot", "columnar text for gnuplot");
  exp->add_option("--input", input, "trajectory CSV, spectrum JSON or lap CSV")->required()->check(CLI::ExistingFile);
  exp->add_option("--kind", kind, "field | section | convergence | lap")
      ->required()
      ->check(CLI::IsMember({"field", "section", "convergence", "lap"}));
  exp->add_option("--x0", x0, "section point for kind=section");
  exp->add_option("--out", plot_out, "output file (default stdout)");

  bool as_json = false;
  auto* list = app.add_subcommand("list-scenarios", "catalog of built-in scenarios");
  list->add_flag("--json", as_json, "print every scenario as editable JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(sim_opts, lap_pair);
    if (*spec) return cmd_spectrum(spec_opts, plots);
    if (*omega) return cmd_omega(omega_opts, save_traj);
    if (*ver) return cmd_verify(full, vseed, vout, only, jobs, diffusion);
    if (*exp) return cmd_export(input, kind, x0, plot_out);
    if (*list) return cmd_list(as_json);
  } catch (const BlowUpError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
