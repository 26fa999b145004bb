#include "rdcircle/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "rdcircle/forcing.hpp"
#include "rdcircle/zero_number.hpp"

namespace rdcircle {

using nlohmann::json;

// ---------------------------------------------------------------------------
// run configuration

void to_json(json& j, const Overrides& o) {
  j = json::object();
  if (o.n) j["n"] = *o.n;
  if (o.dt) j["dt"] = *o.dt;
  if (o.t_end) j["t_end"] = *o.t_end;
  if (o.t_transient) j["t_transient"] = *o.t_transient;
  if (o.stride) j["stride"] = *o.stride;
  if (o.horizon) j["horizon"] = *o.horizon;
  if (o.m) j["m"] = *o.m;
  if (!o.tolerances.empty()) j["tolerances"] = o.tolerances;
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* what) {
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const bool known = std::any_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; });
    if (!known) throw std::invalid_argument(std::string("unknown ") + what + " key: " + it.key());
  }
}

template <class T>
void read_optional(const json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void from_json(const json& j, Overrides& o) {
  reject_unknown(j, {"n", "dt", "t_end", "t_transient", "stride", "horizon", "m", "tolerances"}, "override");
  o = Overrides{};
  read_optional(j, "n", o.n);
  read_optional(j, "dt", o.dt);
  read_optional(j, "t_end", o.t_end);
  read_optional(j, "t_transient", o.t_transient);
  read_optional(j, "stride", o.stride);
  read_optional(j, "horizon", o.horizon);
  read_optional(j, "m", o.m);
  if (j.contains("tolerances")) {
    o.tolerances = j.at("tolerances");
    if (!o.tolerances.is_object()) throw std::invalid_argument("tolerances must be an object");
  }
}

void to_json(json& j, const RunConfig& c) {
  j = json{{"scenario", c.scenario},
           {"overrides", c.overrides},
           {"seed", c.seed},
           {"random_initial", c.random_initial},
           {"out", c.out},
           {"plots", c.plots}};
  if (!c.inline_scenario.is_null()) j["inline_scenario"] = c.inline_scenario;
}

void from_json(const json& j, RunConfig& c) {
  reject_unknown(j, {"scenario", "inline_scenario", "overrides", "seed", "random_initial", "out", "plots"}, "config");
  c = RunConfig{};
  if (j.contains("scenario")) c.scenario = j.at("scenario").get<std::string>();
  if (j.contains("inline_scenario")) c.inline_scenario = j.at("inline_scenario");
  if (j.contains("overrides")) c.overrides = j.at("overrides").get<Overrides>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("random_initial")) c.random_initial = j.at("random_initial").get<bool>();
  if (j.contains("out")) c.out = j.at("out").get<std::string>();
  if (j.contains("plots")) c.plots = j.at("plots").get<bool>();
}

Scenario resolve(const RunConfig& c) {
  Scenario s = c.inline_scenario.is_null() ? make_scenario(c.scenario) : c.inline_scenario.get<Scenario>();
  const auto& o = c.overrides;
  for (SolverConfig* cfg : {&s.config, &s.omega.config, &s.spectrum.config}) {
    if (o.n) cfg->n = *o.n;
    if (o.dt) cfg->dt = *o.dt;
    validate(*cfg);
  }
  if (o.t_end) {
    if (!(*o.t_end > 0.0)) throw std::invalid_argument("t_end must be positive");
    s.t_end = *o.t_end;
    s.omega.t_end = *o.t_end;
  }
  if (o.t_transient) s.omega.t_transient = *o.t_transient;
  if (o.stride) {
    if (*o.stride == 0) throw std::invalid_argument("stride must be positive");
    s.omega.stride = *o.stride;
  }
  if (o.horizon) s.spectrum.horizon = *o.horizon;
  if (o.m) {
    if (*o.m == 0) throw std::invalid_argument("m must be positive");
    s.spectrum.m = *o.m;
    s.spectrum.k_max = (*o.m - 1) / 2;
  }
  if (!o.tolerances.empty()) {
    json t = s.omega.tolerances;
    for (auto it = o.tolerances.begin(); it != o.tolerances.end(); ++it)
      if (!t.contains(it.key())) throw std::invalid_argument("unknown tolerance: " + it.key());
    t.merge_patch(o.tolerances);
    s.omega.tolerances = t.get<OmegaTolerances>();
  }
  s.spectrum.options.seed = c.seed;
  s.omega.tolerances.seed = c.seed;
  if (c.random_initial) s.u0 = s.random_u0.draw(c.seed);
  return s;
}

// ---------------------------------------------------------------------------
// pipelines

namespace {

bool homogeneous_along(const Trajectory& traj) {
  return std::all_of(traj.samples.begin(), traj.samples.end(),
                     [](const TrajectorySample& smp) { return norm_sup(deriv_x(smp.state)) < 1e-8; });
}

OmegaSample omega_sample(const Scenario& s, const InitialData& u0) {
  const auto& p = s.omega;
  const auto traj = evolve(u0.build(p.config.n), s.field, p.t_end, p.config, p.stride);
  return sample_omega(traj, p.t_transient, p.stride);
}

}  // namespace

SpectrumRun run_spectrum(const Scenario& s) {
  const auto& p = s.spectrum;
  SpectrumRun r;
  const std::size_t steps = std::max<std::size_t>(1, make_schedule(p.horizon, p.config.dt).total());
  r.base = evolve(p.base.build(p.config.n), s.field, p.horizon, p.config, steps);
  r.estimate = lyapunov_spectrum(r.base, p.m, p.horizon, p.options);
  if (homogeneous_along(r.base)) r.crosscheck = floquet_vs_frame_crosscheck(r.base, p.k_max, r.estimate);
  return r;
}

OmegaRun run_omega(const Scenario& s, const InitialData& u0) {
  OmegaRun r{omega_sample(s, u0), {}};
  r.analysis = analyze_omega(r.sample, s.omega.tolerances);
  return r;
}

std::vector<std::string> spectrum_mismatches(const Expectations& e, const SpectrumEstimate& s) {
  std::vector<std::string> out;
  std::ostringstream os;
  os.precision(6);
  if (!e.spectrum.empty()) {
    if (e.spectrum.size() != s.exponents.size()) {
      os << "expected " << e.spectrum.size() << " exponents, got " << s.exponents.size();
      out.push_back(os.str());
    } else {
      for (std::size_t i = 0; i < e.spectrum.size(); ++i) {
        const double err = std::abs(s.exponents[i] - e.spectrum[i]);
        if (!(err <= e.spectrum_tol)) {
          os.str("");
          os << "exponent " << i << ": " << s.exponents[i] << " vs " << e.spectrum[i] << " (off by " << err << ")";
          out.push_back(os.str());
        }
      }
    }
  }
  auto dim = [&](const char* name, const std::optional<std::size_t>& want, std::size_t got) {
    if (want && *want != got) out.push_back(std::string(name) + " = " + std::to_string(got) + ", expected " +
                                            std::to_string(*want));
  };
  dim("dim_u", e.dim_u, s.dim_u);
  dim("dim_c", e.dim_c, s.dim_c);
  dim("N_u", e.n_u, s.n_u);
  return out;
}

// ---------------------------------------------------------------------------
// verification suite

std::string to_string(Suite s) { return s == Suite::quick ? "quick" : "full"; }

std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::not_applicable: return "not_applicable";
  }
  return "fail";
}

VerifySummary VerifyReport::summary() const {
  VerifySummary s;
  for (const auto& c : checks) {
    if (c.status == CheckStatus::pass) ++s.pass;
    else if (c.status == CheckStatus::fail) ++s.fail;
    else ++s.not_applicable;
  }
  return s;
}

namespace {

struct CheckInfo {
  const char* id;
  const char* title;
  const char* anchor;
};

constexpr CheckInfo kChecks[] = {
    {"AC01", "closed-form solution reproduction", "φ(t,x,u_0,g)=e^{∫_0^tf(s)ds} sin x"},
    {"AC02", "ψ lower bound at dyadic times", "ψ(2^n)≥ e^{-2π-2}"},
    {"AC03", "ψ smallness", "ψ(t_n)→0"},
    {"AC04", "spectrum of the homogeneous case", "σ(ω(u_0,f))={0,-1,⋯,-k^2,⋯}"},
    {"AC05", "spectrum of the inhomogeneous case", "dim V^c(ω(u_0,f))=2"},
    {"AC06", "Floquet cross-check", "form a Floquet basis"},
    {"AC07", "zero-number monotonicity", "is non-increasing in t"},
    {"AC08", "common critical point", "one has u_x(x_0)=0"},
    {"AC09", "reflection equivariance", "ρ_aφ(t,·;u,g)=φ(t,·;ρ_au,g)"},
    {"AC10", "at most two minimal sets", "contains at most two minimal sets"},
    {"AC11", "classification flags", "spatially-homogeneous 1-cover of H(f)"},
    {"AC12", "linearization consistency", "linearized variational equation"},
};

const CheckInfo& info(const std::string& id) {
  for (const auto& c : kChecks)
    if (id == c.id) return c;
  throw std::invalid_argument("unknown check: " + id);
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t z = seed ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b * 0xbf58476d1ce4e5b9ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Shared results keyed by name; the first caller computes, others wait.
template <class T>
class Memo {
 public:
  const T& get(const std::string& key, const std::function<T()>& make) {
    std::unique_lock lock(mutex_);
    auto it = slots_.find(key);
    if (it != slots_.end()) {
      auto f = it->second;
      lock.unlock();
      return f.get();
    }
    std::packaged_task<T()> task(make);
    auto f = task.get_future().share();
    slots_.emplace(key, f);
    lock.unlock();
    task();
    return f.get();
  }

 private:
  std::mutex mutex_;
  std::map<std::string, std::shared_future<T>> slots_;
};

class Context {
 public:
  explicit Context(VerifyOptions o) : options(std::move(o)) {}

  VerifyOptions options;

  bool full() const { return options.suite == Suite::full; }
  std::size_t scaled(std::size_t full_count, std::size_t quick_count) const {
    return full() ? full_count : quick_count;
  }

  SolverConfig tuned(SolverConfig c) const {
    if (options.diffusion) c.diffusion = *options.diffusion;
    return c;
  }

  Scenario scenario(const std::string& name) const {
    Scenario s = make_scenario(name);
    s.config = tuned(s.config);
    s.omega.config = tuned(s.omega.config);
    s.spectrum.config = tuned(s.spectrum.config);
    return s;
  }

  const SpectrumRun& spectrum(const std::string& name) {
    return spectra_.get(name, [this, name] { return run_spectrum(scenario(name)); });
  }

  const OmegaRun& omega(const std::string& name) {
    return omegas_.get(name, [this, name] {
      const auto s = scenario(name);
      return run_omega(s, s.u0);
    });
  }

 private:
  Memo<SpectrumRun> spectra_;
  Memo<OmegaRun> omegas_;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void finish(CheckRecord& r, bool ok) {
  r.status = ok ? CheckStatus::pass : CheckStatus::fail;
  if (!ok && r.diagnostics.empty()) r.diagnostics.push_back("measured values outside tolerances");
}

// --- individual checks ------------------------------------------------------

void closed_form(Context& ctx, CheckRecord& r) {
  const auto s = ctx.scenario("ex61-l-1");
  if (!s.oracle) throw std::runtime_error("scenario has no closed form");
  SolverConfig cfg = s.config;
  cfg.n = 64;
  cfg.dt = 1e-3;
  const double t_end = 10.0;
  const auto traj = evolve(s.initial(cfg.n), s.field, t_end, cfg, 1000);
  double worst = 0.0, worst_t = 0.0;
  for (const auto& smp : traj.samples) {
    if (smp.t == 0.0) continue;
    double err = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < cfg.n; ++j) {
      const double exact = s.oracle(smp.t, GridFunction::grid_point(cfg.n, j));
      err = std::max(err, std::abs(smp.state[j] - exact));
      scale = std::max(scale, std::abs(exact));
    }
    const double rel = err / scale;
    if (!(rel <= worst)) {
      worst = rel;
      worst_t = smp.t;
    }
  }
  r.measured = {{"relative_error", worst}, {"at_t", worst_t}, {"n", cfg.n}, {"dt", cfg.dt}, {"t_end", t_end}};
  r.tolerances = {{"relative_error", 1e-6}};
  const bool ok = worst <= 1e-6;
  if (!ok) r.diagnostics.push_back("relative C0 error " + fmt(worst) + " at t = " + fmt(worst_t));
  finish(r, ok);
}

void psi_lower_bound(Context&, CheckRecord& r) {
  const auto sig = example61_signal();
  const double bound = std::exp(-2.0 * kPi - 2.0);
  json values = json::array();
  double smallest = std::numeric_limits<double>::infinity();
  bool ok = true;
  for (int n = 1; n <= 14; ++n) {
    const double psi = std::exp(integral_signal(sig, std::ldexp(1.0, n)));
    values.push_back(psi);
    smallest = std::min(smallest, psi);
    if (!(psi >= bound)) {
      ok = false;
      r.diagnostics.push_back("ψ(2^" + std::to_string(n) + ") = " + fmt(psi) + " below " + fmt(bound));
    }
  }
  r.measured = {{"psi", values}, {"min", smallest}, {"terms", sig.truncation_count()}};
  r.tolerances = {{"lower_bound", bound}};
  finish(r, ok);
}

void psi_smallness(Context&, CheckRecord& r) {
  const auto sig = example61_signal();
  const std::size_t points = (std::size_t{1} << 22) + 1;  // [0, 2^20] at step 0.25
  double lowest = std::numeric_limits<double>::infinity(), at = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double t = 0.25 * static_cast<double>(i);
    const double v = integral_signal(sig, t);
    if (v < lowest) {
      lowest = v;
      at = t;
    }
  }
  const double psi = std::exp(lowest);
  r.measured = {{"min_psi", psi}, {"argmin_t", at}, {"points", points}};
  r.tolerances = {{"max_min_psi", 0.05}};
  const bool ok = psi <= 0.05;
  if (!ok) r.diagnostics.push_back("min ψ = " + fmt(psi));
  finish(r, ok);
}

void spectrum_case(Context& ctx, CheckRecord& r, const std::string& name) {
  const auto s = ctx.scenario(name);
  const auto& est = ctx.spectrum(name).estimate;
  r.measured = {{"scenario", name},        {"exponents", est.exponents}, {"dim_u", est.dim_u},
                {"dim_c", est.dim_c},      {"n_u", est.n_u},             {"horizon", est.horizon},
                {"intervals", est.intervals}};
  r.tolerances = {{"expected", s.expected.spectrum}, {"abs", s.expected.spectrum_tol}};
  if (s.expected.dim_u) r.tolerances["dim_u"] = *s.expected.dim_u;
  if (s.expected.dim_c) r.tolerances["dim_c"] = *s.expected.dim_c;
  if (s.expected.n_u) r.tolerances["n_u"] = *s.expected.n_u;
  r.diagnostics = spectrum_mismatches(s.expected, est);
  finish(r, r.diagnostics.empty());
}

void floquet_crosscheck(Context& ctx, CheckRecord& r) {
  const std::pair<const char*, double> cases[] = {{"ex61-l0", 0.05}, {"ex61-l-1", 0.05}, {"heat", 1e-6}};
  bool ok = true;
  for (const auto& [name, tol] : cases) {
    const auto& run = ctx.spectrum(name);
    r.tolerances[name] = {{"max_discrepancy", tol}};
    if (!run.crosscheck) {
      ok = false;
      r.measured[name] = nullptr;
      r.diagnostics.push_back(std::string(name) + ": base trajectory is not homogeneous");
      continue;
    }
    const auto& c = *run.crosscheck;
    r.measured[name] = {{"max_discrepancy", c.max_discrepancy},
                        {"floquet", c.floquet},
                        {"lyapunov", c.lyapunov},
                        {"max_drift", c.max_drift}};
    if (!(c.max_discrepancy < tol)) {
      ok = false;
      r.diagnostics.push_back(std::string(name) + ": discrepancy " + fmt(c.max_discrepancy));
    }
  }
  finish(r, ok);
}

void lap_monotonicity(Context& ctx, CheckRecord& r) {
  const std::size_t pairs = ctx.scaled(50, 10);
  const double t_end = 50.0;
  const std::size_t stride = 10;
  bool ok = true;
  std::size_t field_index = 0;
  for (const std::string name : {"bistable", "ex62"}) {
    const auto s = ctx.scenario(name);
    SolverConfig cfg = s.config;
    cfg.n = 32;
    cfg.dt = 0.01;
    std::size_t drops = 0, increases = 0, unwitnessed = 0, odd = 0, uncertifiable = 0, max_count = 0;
    for (std::size_t p = 0; p < pairs; ++p) {
      const auto a = s.random_u0.draw(mix(ctx.options.seed, 7 + field_index, 2 * p));
      const auto b = s.random_u0.draw(mix(ctx.options.seed, 7 + field_index, 2 * p + 1));
      const auto ta = evolve(a.build(cfg.n), s.field, t_end, cfg, stride);
      const auto tb = evolve(b.build(cfg.n), s.field, t_end, cfg, stride);
      const auto rep = lap_monitor(ta, tb);
      drops += rep.drops.size();
      increases += rep.increases.size();
      uncertifiable += rep.uncertifiable.size();
      for (auto i : rep.increases)
        r.diagnostics.push_back(name + " pair " + std::to_string(p) + ": count increased at t = " +
                                fmt(rep.samples[i].t));
      for (const auto& d : rep.drops)
        if (!d.witness_ok) {
          ++unwitnessed;
          r.diagnostics.push_back(name + " pair " + std::to_string(p) + ": drop " + std::to_string(d.before) + "->" +
                                  std::to_string(d.after) + " near t = " + fmt(d.t_lo) + " without a multiple zero");
        }
      std::optional<std::size_t> last;
      for (const auto& smp : rep.samples)
        if (smp.status == LapStatus::certified) {
          last = smp.count;
          max_count = std::max(max_count, smp.count);
        }
      if (last && *last % 2 == 1) {
        ++odd;
        r.diagnostics.push_back(name + " pair " + std::to_string(p) + ": odd final count " + std::to_string(*last));
      }
    }
    ok = ok && increases == 0 && unwitnessed == 0 && odd == 0;
    r.measured[name] = {{"pairs", pairs},
                        {"drops", drops},
                        {"increases", increases},
                        {"unwitnessed_drops", unwitnessed},
                        {"odd_final_counts", odd},
                        {"uncertifiable_samples", uncertifiable},
                        {"max_count", max_count}};
    ++field_index;
  }
  r.tolerances = {{"increases", 0}, {"unwitnessed_drops", 0}, {"odd_final_counts", 0}, {"t_end", t_end}};
  finish(r, ok);
}

void critical_point(Context& ctx, CheckRecord& r) {
  const double tol = 1e-4;
  bool ok = true;
  {
    const auto& run = ctx.omega("ex61-l-1");
    const auto& cp = run.analysis.critical;
    const std::size_t n = run.sample.snapshots.front().state.size();
    const double cell = kTwoPi / static_cast<double>(n);
    json m = {{"max_slope", cp.max_slope}, {"snapshots", run.sample.size()}, {"grid_cell", cell}};
    if (cp.x0) {
      const double off = std::min(phase_gap(*cp.x0, kPi / 2.0), phase_gap(*cp.x0, 3.0 * kPi / 2.0));
      m["x0"] = *cp.x0;
      m["distance_to_pole"] = off;
      if (!(cp.max_slope < tol && off <= cell)) {
        ok = false;
        r.diagnostics.push_back("ex61-l-1: x0 = " + fmt(*cp.x0) + " max|u_x| = " + fmt(cp.max_slope));
      }
    } else {
      ok = false;
      m["x0"] = nullptr;
      r.diagnostics.push_back("ex61-l-1: no common critical point (best max|u_x| " + fmt(cp.max_slope) + ")");
    }
    r.measured["ex61-l-1"] = m;
  }
  const auto s = ctx.scenario("bistable");
  const std::size_t runs = ctx.scaled(10, 3);
  std::size_t passed = 0, homogeneous = 0, inhomogeneous_start = 0;
  for (std::size_t i = 0; i < runs; ++i) {
    const auto u0 = s.random_u0.draw(mix(ctx.options.seed, 8, i));
    if (norm_sup(deriv_x(u0.build(s.omega.config.n))) > 1e-6) ++inhomogeneous_start;
    const auto sample = omega_sample(s, u0);
    const auto cp = find_common_critical_point(sample, tol);
    if (cp.every_point) ++homogeneous;
    if (cp.x0 || cp.every_point) {
      ++passed;
    } else {
      ok = false;
      r.diagnostics.push_back("bistable run " + std::to_string(i) + ": max|u_x(x0)| = " + fmt(cp.max_slope));
    }
  }
  r.measured["bistable"] = {
      {"runs", runs}, {"passed", passed}, {"homogeneous", homogeneous}, {"inhomogeneous_initial", inhomogeneous_start}};
  r.tolerances = {{"max_slope", tol}, {"distance_to_pole", "one grid cell"}};
  finish(r, ok);
}

void reflection(Context& ctx, CheckRecord& r) {
  const std::size_t per_field = ctx.scaled(10, 3);
  const double t_end = 5.0, tol = 1e-8;
  bool ok = true;
  double overall = 0.0;
  std::size_t index = 0;
  for (const auto& name : scenario_names()) {
    const auto s = ctx.scenario(name);
    SolverConfig cfg = s.config;
    cfg.n = 64;
    cfg.dt = 0.01;
    std::mt19937_64 rng(mix(ctx.options.seed, 9, index));
    std::uniform_real_distribution<double> angle(0.0, kTwoPi);
    double worst = 0.0;
    for (std::size_t i = 0; i < per_field; ++i) {
      const double a = angle(rng);
      const auto u0 = s.random_u0.draw(mix(ctx.options.seed, 9, 1000 * (index + 1) + i)).build(cfg.n);
      const auto direct = evolve(u0, s.field, t_end, cfg, 50);
      const auto mirrored = evolve(reflect(u0, a), s.field, t_end, cfg, 50);
      for (std::size_t k = 0; k < direct.samples.size(); ++k)
        worst = std::max(worst, norm_sup(mirrored.samples[k].state - reflect(direct.samples[k].state, a)));
    }
    if (!(worst < tol)) {
      ok = false;
      r.diagnostics.push_back(name + ": defect " + fmt(worst));
    }
    r.measured[name] = {{"runs", per_field}, {"max_defect", worst}};
    overall = std::max(overall, worst);
    ++index;
  }
  r.measured["max_defect"] = overall;
  r.tolerances = {{"max_defect", tol}, {"t_end", t_end}};
  finish(r, ok);
}

void minimal_sets(Context& ctx, CheckRecord& r) {
  const std::size_t randomized = ctx.scaled(20, 3);
  bool ok = true;
  std::size_t index = 0;
  for (const auto& name : scenario_names()) {
    const auto s = ctx.scenario(name);
    const auto& e = s.expected;
    json m;
    std::size_t highest = 0, events = 0, errors = 0;
    const auto& def = ctx.omega(name).analysis;
    const auto case_ = trichotomy_case(def.minimal.count, def.minimal.connecting_detected);
    m["default"] = {{"count", def.minimal.count},
                    {"connecting", def.minimal.connecting_detected},
                    {"trichotomy_case", to_string(case_)}};
    highest = def.minimal.count;
    auto expect = [&](bool good, const std::string& what) {
      if (!good) {
        ok = false;
        r.diagnostics.push_back(name + " default run: " + what);
      }
    };
    if (e.minimal_set_count)
      expect(def.minimal.count == *e.minimal_set_count, "count " + std::to_string(def.minimal.count));
    if (e.connecting)
      expect(def.minimal.connecting_detected == *e.connecting,
             std::string("connecting evidence ") + (def.minimal.connecting_detected ? "present" : "absent"));
    if (e.trichotomy) expect(case_ == *e.trichotomy, "case " + to_string(case_));
    if (def.minimal.count > e.max_minimal_sets) ++events;
    for (std::size_t i = 0; i < randomized; ++i) {
      try {
        const auto run = run_omega(s, s.random_u0.draw(mix(ctx.options.seed, 10 + index, i)));
        const std::size_t c = run.analysis.minimal.count;
        highest = std::max(highest, c);
        if (c > e.max_minimal_sets) {
          ++events;
          r.diagnostics.push_back(name + " run " + std::to_string(i) + ": " + std::to_string(c) +
                                  " recurrent clusters in one fiber");
        }
      } catch (const std::exception& ex) {
        ++errors;
        r.diagnostics.push_back(name + " run " + std::to_string(i) + ": " + ex.what());
      }
    }
    if (events > 0 || errors > 0) ok = false;
    m["runs"] = randomized + 1;
    m["max_count"] = highest;
    m["falsification_events"] = events;
    m["errors"] = errors;
    r.measured[name] = m;
    r.tolerances[name] = {{"max_minimal_sets", e.max_minimal_sets}};
    ++index;
  }
  finish(r, ok);
}

void classification(Context& ctx, CheckRecord& r) {
  bool ok = true;
  for (const auto& name : scenario_names()) {
    const auto s = ctx.scenario(name);
    if (!s.expected.implication_rule) continue;
    const auto report = classify(ctx.omega(name).analysis, ctx.spectrum(name).estimate);
    const auto& f = report.implication;
    r.measured[name] = {{"rule", f.rule},
                        {"applicable", f.applicable},
                        {"passed", f.passed},
                        {"detail", f.detail},
                        {"dim_u", report.dim_u},
                        {"dim_c", report.dim_c},
                        {"homogeneous", report.homogeneous},
                        {"minimal_set_count", report.minimal_set_count},
                        {"cover_cardinality", report.cover_cardinality}};
    r.tolerances[name] = {{"rule", *s.expected.implication_rule}};
    bool good = f.rule == *s.expected.implication_rule && report.flags_pass();
    if (f.rule == "none") good = good && f.detail == "no applicable implication";
    if (!good) {
      ok = false;
      r.diagnostics.push_back(name + ": rule " + f.rule + " (expected " + *s.expected.implication_rule + ")");
      for (const auto& ev : report.falsifications) r.diagnostics.push_back(name + ": " + ev.kind + ": " + ev.detail);
    }
  }
  finish(r, ok);
}

void linearization(Context& ctx, CheckRecord& r) {
  const double t_end = 1.0, min_slope = 0.9, floor_rel = 1e-9;
  const double eps[] = {1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4};
  bool ok = true;
  std::size_t index = 0;
  for (const auto& name : scenario_names()) {
    const auto s = ctx.scenario(name);
    SolverConfig cfg = s.config;
    cfg.n = 32;
    cfg.dt = 0.01;
    EtdStepper stepper(s.field, cfg);
    const auto sched = make_schedule(t_end, cfg.dt);
    auto flow = [&](const GridFunction& u, Spectrum* tangent) {
      Spectrum c(u.coefficients().begin(), u.coefficients().end());
      std::span<Spectrum> tan = tangent ? std::span<Spectrum>(tangent, 1) : std::span<Spectrum>();
      double t = 0.0;
      for (std::size_t i = 0; i < sched.full_steps; ++i) {
        stepper.advance(c, t, cfg.dt, tan);
        t += cfg.dt;
      }
      if (sched.last_step > 0.0) stepper.advance(c, t, sched.last_step, tan);
      return GridFunction::from_coefficients(cfg.n, std::move(c));
    };
    const auto u0 = s.u0.build(cfg.n);
    auto v = s.random_u0.draw(mix(ctx.options.seed, 12, index)).build(cfg.n);
    v = v * (1.0 / norm_sup(v));
    Spectrum tv(v.coefficients().begin(), v.coefficients().end());
    const auto base = flow(u0, &tv);
    const auto tangent = GridFunction::from_coefficients(cfg.n, tv);
    json errors = json::array();
    std::vector<double> le, lx;
    double largest = 0.0;
    for (double e : eps) {
      const auto moved = flow(u0 + v * e, nullptr);
      const double err = norm_sup((moved - base) * (1.0 / e) - tangent);
      errors.push_back(err);
      largest = std::max(largest, err);
      le.push_back(std::log(err));
      lx.push_back(std::log(e));
    }
    const double floor = floor_rel * std::max(1.0, norm_sup(tangent));
    const bool exact = largest <= floor;
    double slope = std::numeric_limits<double>::quiet_NaN();
    if (!exact) {
      double mx = 0, my = 0;
      for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += le[i];
      mx /= static_cast<double>(lx.size());
      my /= static_cast<double>(lx.size());
      double sxy = 0, sxx = 0;
      for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (le[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
      }
      slope = sxy / sxx;
    }
    const bool good = exact || slope >= min_slope;
    if (!good) {
      ok = false;
      r.diagnostics.push_back(name + ": finite-difference error slope " + fmt(slope));
    }
    r.measured[name] = {{"epsilons", eps}, {"errors", errors}, {"roundoff_exact", exact}};
    if (!exact) r.measured[name]["slope"] = slope;
    ++index;
  }
  r.tolerances = {{"min_slope", min_slope}, {"roundoff_floor_relative", floor_rel}, {"t_end", t_end}};
  finish(r, ok);
}

void dispatch(Context& ctx, CheckRecord& r) {
  const std::string& id = r.id;
  if (id == "AC01") closed_form(ctx, r);
  else if (id == "AC02") psi_lower_bound(ctx, r);
  else if (id == "AC03") psi_smallness(ctx, r);
  else if (id == "AC04") spectrum_case(ctx, r, "ex61-l0");
  else if (id == "AC05") spectrum_case(ctx, r, "ex61-l-1");
  else if (id == "AC06") floquet_crosscheck(ctx, r);
  else if (id == "AC07") lap_monotonicity(ctx, r);
  else if (id == "AC08") critical_point(ctx, r);
  else if (id == "AC09") reflection(ctx, r);
  else if (id == "AC10") minimal_sets(ctx, r);
  else if (id == "AC11") classification(ctx, r);
  else if (id == "AC12") linearization(ctx, r);
}

CheckRecord execute(Context& ctx, const std::string& id) {
  const auto& ci = info(id);
  CheckRecord r;
  r.id = ci.id;
  r.title = ci.title;
  r.anchor = ci.anchor;
  try {
    dispatch(ctx, r);
  } catch (const std::exception& e) {
    r.status = CheckStatus::fail;
    r.diagnostics.push_back(std::string("error: ") + e.what());
  }
  return r;
}

}  // namespace

std::vector<std::string> check_ids() {
  std::vector<std::string> out;
  for (const auto& c : kChecks) out.emplace_back(c.id);
  return out;
}

std::string check_anchor(const std::string& id) { return info(id).anchor; }
std::string check_title(const std::string& id) { return info(id).title; }

CheckRecord run_check(const std::string& id, const VerifyOptions& options) {
  info(id);
  Context ctx(options);
  return execute(ctx, id);
}

VerifyReport run_verify(const VerifyOptions& options) {
  std::vector<std::string> ids;
  if (options.only.empty()) {
    ids = check_ids();
  } else {
    for (const auto& c : kChecks)
      if (std::find(options.only.begin(), options.only.end(), c.id) != options.only.end()) ids.emplace_back(c.id);
    for (const auto& id : options.only) info(id);
  }
  Context ctx(options);
  VerifyReport report;
  report.suite = options.suite;
  report.seed = options.seed;
  report.diffusion = options.diffusion;
  report.checks.resize(ids.size());

  std::size_t jobs = options.jobs ? options.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, ids.size());
  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < ids.size(); i = next++) {
      const auto start = std::chrono::steady_clock::now();
      report.checks[i] = execute(ctx, ids[i]);
      if (options.progress) {
        const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
        std::lock_guard lock(progress_mutex);
        options.progress(report.checks[i], took.count());
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < jobs; ++k) pool.emplace_back(worker);
  }
  return report;
}

void to_json(json& j, const CheckRecord& r) {
  j = json{{"id", r.id},
           {"title", r.title},
           {"anchor", r.anchor},
           {"status", to_string(r.status)},
           {"measured", r.measured},
           {"tolerances", r.tolerances},
           {"diagnostics", r.diagnostics}};
}

void to_json(json& j, const VerifyReport& r) {
  const auto s = r.summary();
  j = json{{"suite", to_string(r.suite)},
           {"seed", r.seed},
           {"diffusion_override", r.diffusion ? json(*r.diffusion) : json(nullptr)},
           {"checks", r.checks},
           {"summary", {{"pass", s.pass}, {"fail", s.fail}, {"not_applicable", s.not_applicable}, {"total", r.checks.size()}}}};
}

std::string summary_text(const VerifyReport& r) {
  std::ostringstream os;
  for (const auto& c : r.checks) {
    os << c.id << "  " << to_string(c.status) << "  " << c.title << "  \"" << c.anchor << "\"\n";
    if (c.status == CheckStatus::fail)
      for (const auto& d : c.diagnostics) os << "      " << d << '\n';
  }
  const auto s = r.summary();
  os << "pass " << s.pass << ", fail " << s.fail << ", not applicable " << s.not_applicable << '\n';
  return os.str();
}

}  // namespace rdcircle
