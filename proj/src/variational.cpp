#include "rdcircle/variational.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace rdcircle {

LinearCoefficients linearize(const ForcingField& field, const GridFunction& u, double t) {
  const GridFunction ux = deriv_x(u);
  const std::size_t n = u.size();
  std::vector<double> gu(n), gp(n);
  field.partials(t, u.values(), ux.values(), gu, gp);
  return {GridFunction::from_values(std::move(gp)), GridFunction::from_values(std::move(gu)), t};
}

namespace {

// Modified Gram–Schmidt in the discrete L² product; returns the norms removed.
std::vector<double> orthonormalize(std::vector<Spectrum>& vs, std::size_t n) {
  std::vector<double> norms(vs.size());
  for (std::size_t i = 0; i < vs.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double proj = inner_product(vs[i], vs[j], n);
      for (std::size_t k = 0; k < vs[i].size(); ++k) vs[i][k] -= proj * vs[j][k];
    }
    const double norm = std::sqrt(inner_product(vs[i], vs[i], n));
    if (!(norm > 1e-300)) throw std::runtime_error("tangent frame collapsed");
    for (auto& c : vs[i]) c /= norm;
    norms[i] = norm;
  }
  return norms;
}

std::vector<Spectrum> to_spectra(const TangentFrame& frame) {
  std::vector<Spectrum> out;
  out.reserve(frame.size());
  for (const auto& v : frame.vectors) out.emplace_back(v.coefficients().begin(), v.coefficients().end());
  return out;
}

bool homogeneous(const Trajectory& traj, double tol) {
  return std::all_of(traj.samples.begin(), traj.samples.end(),
                     [&](const TrajectorySample& s) { return norm_sup(deriv_x(s.state)) < tol; });
}

}  // namespace

TangentFrame random_frame(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (!is_valid_grid_size(n)) throw std::invalid_argument("grid size must be a power of two >= 16");
  if (m == 0 || m > n / 4) throw std::invalid_argument("frame size must be in [1, N/4]");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t kmax = std::min(n / 4, m + 2);
  std::vector<Spectrum> vs(m, Spectrum(n / 2 + 1));
  for (auto& v : vs) {
    v[0] = normal(rng);
    for (std::size_t k = 1; k <= kmax; ++k) v[k] = {normal(rng), normal(rng)};
  }
  orthonormalize(vs, n);
  TangentFrame frame;
  for (auto& v : vs) frame.vectors.push_back(GridFunction::from_coefficients(n, std::move(v)));
  frame.log_growth.assign(m, 0.0);
  return frame;
}

double gram_deviation(const TangentFrame& frame) {
  double worst = 0.0;
  for (std::size_t i = 0; i < frame.size(); ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double g = inner_product(frame.vectors[i].coefficients(), frame.vectors[j].coefficients(),
                                     frame.vectors[i].size());
      worst = std::max(worst, std::abs(g - (i == j ? 1.0 : 0.0)));
    }
  return worst;
}

TangentFrame evolve_tangent(const Trajectory& traj, TangentFrame frame, std::size_t qr_interval) {
  if (traj.samples.empty()) throw std::invalid_argument("empty trajectory");
  if (qr_interval == 0) throw std::invalid_argument("qr_interval must be positive");
  const std::size_t n = traj.config.n;
  for (const auto& v : frame.vectors)
    if (v.size() != n) throw std::invalid_argument("frame vectors must live on the trajectory grid");
  if (frame.log_growth.size() != frame.size()) frame.log_growth.assign(frame.size(), 0.0);

  EtdStepper stepper(traj.field, traj.config);
  const double t0 = traj.samples.front().t;
  Spectrum base(traj.samples.front().state.coefficients().begin(), traj.samples.front().state.coefficients().end());
  auto vs = to_spectra(frame);
  const StepSchedule plan = make_schedule(traj.t_end() - t0, traj.config.dt);
  const std::size_t total = plan.total();
  for (std::size_t i = 0; i < total; ++i) {
    const bool last = i + 1 == total;
    const double h = (last && plan.last_step > 0.0) ? plan.last_step : traj.config.dt;
    const double t = t0 + static_cast<double>(i) * traj.config.dt;
    stepper.advance(base, t, h, vs);
    if (stepper.exceeds_threshold(base)) throw BlowUpError(t + h);
    if (last || (i + 1) % qr_interval == 0) {
      const auto norms = orthonormalize(vs, n);
      for (std::size_t k = 0; k < norms.size(); ++k) frame.log_growth[k] += std::log(norms[k]);
    }
  }
  frame.vectors.clear();
  for (auto& v : vs) frame.vectors.push_back(GridFunction::from_coefficients(n, std::move(v)));
  frame.t = traj.t_end();
  return frame;
}

void assign_dimensions(SpectrumEstimate& s) {
  s.dim_u = 0;
  s.dim_c = 0;
  for (double l : s.exponents) {
    if (l > s.gap_tol)
      ++s.dim_u;
    else if (std::abs(l) <= s.gap_tol)
      ++s.dim_c;
  }
  s.n_u = s.dim_u % 2 == 0 ? s.dim_u : s.dim_u + 1;
}

SpectrumEstimate lyapunov_spectrum(const Trajectory& traj, std::size_t m, double horizon,
                                   const SpectrumOptions& options) {
  if (traj.samples.empty()) throw std::invalid_argument("empty trajectory");
  const SolverConfig& config = traj.config;
  const std::size_t n = config.n;
  if (m == 0 || m > n / 4) throw std::invalid_argument("frame size must be in [1, N/4]");
  const double t0 = traj.samples.front().t;
  if (!(horizon > 0.0) || horizon > traj.t_end() - t0 + 1e-9 * std::max(1.0, horizon))
    throw std::invalid_argument("horizon exceeds trajectory duration");
  const std::size_t qr = config.qr_interval;
  const std::size_t steps = make_schedule(horizon, config.dt).full_steps;
  const std::size_t cycles = steps / qr;
  if (cycles < 100) throw std::invalid_argument("insufficient horizon");
  const std::size_t windows = std::max<std::size_t>(1, options.windows);

  const double cycle_time = static_cast<double>(qr) * config.dt;
  const auto transient_cycle = static_cast<std::size_t>(std::llround(options.transient_fraction * cycles));
  if (transient_cycle + 2 * windows > cycles) throw std::invalid_argument("insufficient horizon");
  const std::size_t half_cycle = cycles / 2;

  EtdStepper stepper(traj.field, config);
  Spectrum base(traj.samples.front().state.coefficients().begin(), traj.samples.front().state.coefficients().end());
  TangentFrame frame = random_frame(n, m, options.seed);
  auto vs = to_spectra(frame);

  // cumulative log-growth after each QR cycle, cum[c][i]
  std::vector<std::vector<double>> cum(cycles + 1, std::vector<double>(m, 0.0));
  std::size_t cycle = 0;
  for (std::size_t i = 0; i < cycles * qr; ++i) {
    const double t = t0 + static_cast<double>(i) * config.dt;
    stepper.advance(base, t, config.dt, vs);
    if (stepper.exceeds_threshold(base)) throw BlowUpError(t + config.dt);
    if ((i + 1) % qr == 0) {
      const auto norms = orthonormalize(vs, n);
      ++cycle;
      for (std::size_t k = 0; k < m; ++k) cum[cycle][k] = cum[cycle - 1][k] + std::log(norms[k]);
    }
  }

  auto rate = [&](std::size_t from, std::size_t to, std::size_t k) {
    return (cum[to][k] - cum[from][k]) / (static_cast<double>(to - from) * cycle_time);
  };

  SpectrumEstimate est;
  est.horizon = static_cast<double>(cycles) * cycle_time;
  est.transient = static_cast<double>(transient_cycle) * cycle_time;
  est.gap_tol = options.gap_tol;
  std::vector<double> raw(m);
  for (std::size_t k = 0; k < m; ++k) raw[k] = rate(transient_cycle, cycles, k);

  std::vector<std::pair<double, double>> ranges(m, {INFINITY, -INFINITY});
  for (std::size_t w = 0; w < windows; ++w) {
    const std::size_t a = half_cycle + (cycles - half_cycle) * w / windows;
    const std::size_t b = half_cycle + (cycles - half_cycle) * (w + 1) / windows;
    if (b <= a) continue;
    for (std::size_t k = 0; k < m; ++k) {
      const double r = rate(a, b, k);
      ranges[k].first = std::min(ranges[k].first, r);
      ranges[k].second = std::max(ranges[k].second, r);
    }
  }

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return raw[a] > raw[b]; });
  for (std::size_t k : order) {
    est.exponents.push_back(raw[k]);
    est.intervals.push_back(ranges[k]);
  }

  const std::size_t points = std::min(options.history, cycles - transient_cycle);
  for (std::size_t p = 1; p <= points; ++p) {
    const std::size_t c = transient_cycle + (cycles - transient_cycle) * p / points;
    std::vector<double> running;
    for (std::size_t k : order) running.push_back(rate(transient_cycle, c, k));
    est.convergence.emplace_back(t0 + static_cast<double>(c) * cycle_time, std::move(running));
  }
  assign_dimensions(est);
  return est;
}

std::vector<FloquetMode> floquet_homogeneous(const ForcingField& field, const Trajectory& traj, std::size_t k_max,
                                             double horizon, double transient_fraction) {
  if (traj.samples.empty()) throw std::invalid_argument("empty trajectory");
  if (!homogeneous(traj, 1e-8)) throw std::invalid_argument("trajectory is not spatially homogeneous");
  const double t0 = traj.samples.front().t;
  if (!(horizon > 0.0) || horizon > traj.t_end() - t0 + 1e-9 * std::max(1.0, horizon))
    throw std::invalid_argument("horizon exceeds trajectory duration");
  const double start = t0 + transient_fraction * horizon;
  const double stop = t0 + horizon;

  double mean_b = 0.0;
  std::vector<std::pair<double, double>> drift{{t0, 0.0}};
  if (const auto* lin = std::get_if<ScalarLinear>(&field.effective())) {
    mean_b = integral_signal(lin->signal, start, stop) / (stop - start) - lin->lambda;
    for (const auto& s : traj.samples)
      if (s.t <= stop) drift.emplace_back(s.t, 0.0);  // a ≡ ∂f/∂p ≡ 0
  } else {
    // Trapezoid rule for ∫b and ∫a along the re-integrated homogeneous orbit.
    EtdStepper stepper(traj.field, traj.config);
    Spectrum u(traj.samples.front().state.coefficients().begin(), traj.samples.front().state.coefficients().end());
    const double dt = traj.config.dt;
    const StepSchedule plan = make_schedule(horizon, dt);
    double integral_b = 0.0;
    double c = 0.0;
    double t = t0;
    double b_prev = field.du(t, u[0].real(), 0.0);
    double a_prev = field.dp(t, u[0].real(), 0.0);
    std::size_t next_sample = 1;
    for (std::size_t i = 0; i < plan.total(); ++i) {
      const bool last = i + 1 == plan.total();
      const double h = (last && plan.last_step > 0.0) ? plan.last_step : dt;
      stepper.advance(u, t, h);
      const double t_next = last ? stop : t0 + static_cast<double>(i + 1) * dt;
      const double b_next = field.du(t_next, u[0].real(), 0.0);
      const double a_next = field.dp(t_next, u[0].real(), 0.0);
      const double lo = std::max(t, start);
      if (t_next > start) {
        const double frac = (t_next - lo) / (t_next - t);
        integral_b += frac * 0.5 * (b_prev + b_next) * (t_next - t);
      }
      c -= 0.5 * (a_prev + a_next) * (t_next - t);
      while (next_sample < traj.samples.size() && traj.samples[next_sample].t <= t_next + 1e-12) {
        drift.emplace_back(traj.samples[next_sample].t, c);
        ++next_sample;
      }
      b_prev = b_next;
      a_prev = a_next;
      t = t_next;
    }
    mean_b = integral_b / (stop - start);
  }

  const double d = traj.config.diffusion;
  std::vector<FloquetMode> modes;
  modes.push_back({0, Parity::cosine, mean_b, drift});
  for (std::size_t k = 1; k <= k_max; ++k) {
    const double e = -d * static_cast<double>(k * k) + mean_b;
    modes.push_back({k, Parity::cosine, e, drift});
    modes.push_back({k, Parity::sine, e, drift});
  }
  return modes;
}

CrosscheckReport floquet_vs_frame_crosscheck(const Trajectory& traj, std::size_t k_max,
                                             const SpectrumEstimate& spectrum) {
  const double t0 = traj.samples.front().t;
  const double transient_fraction = spectrum.transient / spectrum.horizon;
  const auto modes = floquet_homogeneous(traj.field, traj, k_max, spectrum.horizon, transient_fraction);
  CrosscheckReport report;
  for (const auto& mode : modes) {
    report.floquet.push_back(mode.exponent);
    for (const auto& [t, c] : mode.drift) report.max_drift = std::max(report.max_drift, std::abs(c));
  }
  std::sort(report.floquet.begin(), report.floquet.end(), std::greater<>());
  report.lyapunov = spectrum.exponents;
  const std::size_t m = std::min(report.floquet.size(), report.lyapunov.size());
  for (std::size_t i = 0; i < m; ++i)
    report.max_discrepancy = std::max(report.max_discrepancy, std::abs(report.floquet[i] - report.lyapunov[i]));
  (void)t0;
  return report;
}

CrosscheckReport floquet_vs_frame_crosscheck(const Trajectory& traj, std::size_t k_max, double horizon,
                                             const SpectrumOptions& options) {
  if (!homogeneous(traj, 1e-8)) throw std::invalid_argument("trajectory is not spatially homogeneous");
  const SpectrumEstimate spectrum = lyapunov_spectrum(traj, 2 * k_max + 1, horizon, options);
  return floquet_vs_frame_crosscheck(traj, k_max, spectrum);
}

void to_json(nlohmann::json& j, const SpectrumOptions& o) {
  j = nlohmann::json{{"gap_tol", o.gap_tol},
                     {"transient_fraction", o.transient_fraction},
                     {"windows", o.windows},
                     {"history", o.history},
                     {"seed", o.seed}};
}

void from_json(const nlohmann::json& j, SpectrumOptions& o) {
  SpectrumOptions d;
  o.gap_tol = j.value("gap_tol", d.gap_tol);
  o.transient_fraction = j.value("transient_fraction", d.transient_fraction);
  o.windows = j.value("windows", d.windows);
  o.history = j.value("history", d.history);
  o.seed = j.value("seed", d.seed);
}

void to_json(nlohmann::json& j, const SpectrumEstimate& s) {
  nlohmann::json intervals = nlohmann::json::array();
  for (const auto& [lo, hi] : s.intervals) intervals.push_back({lo, hi});
  nlohmann::json history = nlohmann::json::array();
  for (const auto& [t, e] : s.convergence) history.push_back({{"t", t}, {"exponents", e}});
  j = nlohmann::json{{"exponents", s.exponents}, {"horizon", s.horizon},   {"transient", s.transient},
                     {"gap_tol", s.gap_tol},     {"dim_u", s.dim_u},       {"dim_c", s.dim_c},
                     {"N_u", s.n_u},             {"intervals", intervals}, {"convergence", history}};
}

void from_json(const nlohmann::json& j, SpectrumEstimate& s) {
  s.exponents = j.at("exponents").get<std::vector<double>>();
  s.horizon = j.at("horizon").get<double>();
  s.transient = j.value("transient", 0.0);
  s.gap_tol = j.at("gap_tol").get<double>();
  s.dim_u = j.at("dim_u").get<std::size_t>();
  s.dim_c = j.at("dim_c").get<std::size_t>();
  s.n_u = j.at("N_u").get<std::size_t>();
  s.intervals.clear();
  for (const auto& iv : j.at("intervals")) s.intervals.emplace_back(iv.at(0).get<double>(), iv.at(1).get<double>());
  s.convergence.clear();
  if (j.contains("convergence"))
    for (const auto& h : j.at("convergence"))
      s.convergence.emplace_back(h.at("t").get<double>(), h.at("exponents").get<std::vector<double>>());
}

}  // namespace rdcircle
