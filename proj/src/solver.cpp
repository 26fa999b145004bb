#include "rdcircle/solver.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <string>

#include "rdcircle/fft.hpp"

namespace rdcircle {

namespace {

std::string blowup_message(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "blow-up detected at t=%.12e", t);
  return buf;
}

}  // namespace

BlowUpError::BlowUpError(double t) : std::runtime_error(blowup_message(t)), time_(t) {}

void validate(const SolverConfig& c) {
  if (!is_valid_grid_size(c.n)) throw std::invalid_argument("grid size must be a power of two >= 16");
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) throw std::invalid_argument("dt must be positive");
  if (!(c.blowup_threshold > 0.0)) throw std::invalid_argument("blow-up threshold must be positive");
  if (c.qr_interval == 0) throw std::invalid_argument("qr_interval must be positive");
}

void to_json(nlohmann::json& j, const SolverConfig& c) {
  j = nlohmann::json{{"n", c.n},
                     {"dt", c.dt},
                     {"dealias", c.dealias},
                     {"blowup_threshold", c.blowup_threshold},
                     {"qr_interval", c.qr_interval},
                     {"diffusion", c.diffusion}};
}

void from_json(const nlohmann::json& j, SolverConfig& c) {
  SolverConfig d;
  c.n = j.value("n", d.n);
  c.dt = j.value("dt", d.dt);
  c.dealias = j.value("dealias", d.dealias);
  c.blowup_threshold = j.value("blowup_threshold", d.blowup_threshold);
  c.qr_interval = j.value("qr_interval", d.qr_interval);
  c.diffusion = j.value("diffusion", d.diffusion);
}

StepSchedule make_schedule(double duration, double dt) {
  if (!(duration >= 0.0)) throw std::invalid_argument("duration must be non-negative");
  StepSchedule s;
  const double ratio = duration / dt;
  s.full_steps = static_cast<std::size_t>(std::floor(ratio + 1e-9));
  const double rest = duration - static_cast<double>(s.full_steps) * dt;
  s.last_step = rest > 1e-9 * dt ? rest : 0.0;
  return s;
}

std::vector<double> hull_phase_at(const ForcingField& field, double t) {
  std::vector<double> phase(field.hull_phase().begin(), field.hull_phase().end());
  const auto freqs = field.frequencies();
  for (std::size_t i = 0; i < phase.size(); ++i) phase[i] = wrap_phase(phase[i] + freqs[i] * t);
  return phase;
}

// ---------------------------------------------------------------------------

EtdStepper::EtdStepper(ForcingField field, SolverConfig config)
    : field_(std::move(field)), config_(config), modes_(config.n / 2 + 1) {
  validate(config_);
  double rate = 0.0;
  linear_ = field_.linear_rate(0.0, rate);
  gradient_ = field_.depends_on_gradient();
  dealias_cutoff_ = config_.dealias ? config_.n / 3 : config_.n / 2;
  const std::size_t n = config_.n;
  u_.resize(n);
  ux_.resize(n);
  f_.resize(n);
  gu_.resize(n);
  gp_.resize(n);
  w_.resize(n);
  tmp_.resize(modes_);
  main_ = {};
  other_ = {};
  coefficients(config_.dt);
}

const EtdStepper::Coefficients& EtdStepper::coefficients(double h) {
  if (main_.h == h) return main_;
  if (other_.h == h) return other_;
  Coefficients& c = main_.h == 0.0 ? main_ : other_;
  c.h = h;
  c.e.resize(modes_);
  c.e2.resize(modes_);
  c.q.resize(modes_);
  c.f1.resize(modes_);
  c.f2.resize(modes_);
  c.f3.resize(modes_);
  constexpr int kContour = 32;
  for (std::size_t k = 0; k < modes_; ++k) {
    const double kk = static_cast<double>(k);
    const double hl = -config_.diffusion * kk * kk * h;
    c.e[k] = std::exp(hl);
    c.e2[k] = std::exp(0.5 * hl);
    std::complex<double> q{}, f1{}, f2{}, f3{};
    for (int m = 1; m <= kContour; ++m) {
      const std::complex<double> z = hl + std::polar(1.0, kPi * (m - 0.5) / kContour);
      const std::complex<double> ez = std::exp(z);
      const std::complex<double> z3 = z * z * z;
      q += (std::exp(0.5 * z) - 1.0) / z;
      f1 += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
      f2 += (2.0 + z + ez * (z - 2.0)) / z3;
      f3 += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
    }
    c.q[k] = h * q.real() / kContour;
    c.f1[k] = h * f1.real() / kContour;
    c.f2[k] = h * f2.real() / kContour;
    c.f3[k] = h * f3.real() / kContour;
  }
  return c;
}

void EtdStepper::project(Spectrum& s) const {
  for (std::size_t k = dealias_cutoff_ + 1; k < modes_; ++k) s[k] = 0.0;
  s.front() = s.front().real();
  s.back() = s.back().real();
}

void EtdStepper::evaluate_stage(double t, std::size_t stage, std::size_t count) {
  auto& states = state_[stage];
  auto& out = nonlin_[stage];
  double rate = 0.0;
  bool is_linear = false;
  if (linear_) {
    if (rate_ok_[0] && rate_t_[0] == t) {
      rate = rate_v_[0];
      is_linear = true;
    } else if (rate_ok_[1] && rate_t_[1] == t) {
      rate = rate_v_[1];
      is_linear = true;
    } else if (field_.linear_rate(t, rate)) {
      rate_t_[rate_next_] = t;
      rate_v_[rate_next_] = rate;
      rate_ok_[rate_next_] = true;
      rate_next_ ^= 1;
      is_linear = true;
    }
  }
  if (is_linear) {
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t k = 0; k < modes_; ++k) out[i][k] = rate * states[i][k];
    return;
  }

  RealFft& fft = fft_for(config_.n);
  const Spectrum& base = states[0];
  fft.inverse(base, u_);
  for (std::size_t k = 0; k < modes_; ++k) tmp_[k] = std::complex<double>(0.0, static_cast<double>(k)) * base[k];
  tmp_.back() = 0.0;
  fft.inverse(tmp_, ux_);
  field_.evaluate(t, u_, ux_, f_);
  fft.forward(f_, out[0]);
  project(out[0]);
  if (count == 1) return;

  field_.partials(t, u_, ux_, gu_, gp_);
  for (std::size_t i = 1; i < count; ++i) {
    const Spectrum& v = states[i];
    fft.inverse(v, w_);
    for (std::size_t j = 0; j < w_.size(); ++j) w_[j] *= gu_[j];
    if (gradient_) {
      for (std::size_t k = 0; k < modes_; ++k) tmp_[k] = std::complex<double>(0.0, static_cast<double>(k)) * v[k];
      tmp_.back() = 0.0;
      fft.inverse(tmp_, f_);
      for (std::size_t j = 0; j < w_.size(); ++j) w_[j] += gp_[j] * f_[j];
    }
    fft.forward(w_, out[i]);
    project(out[i]);
  }
}

void EtdStepper::advance(Spectrum& u, double t, double h, std::span<Spectrum> tangents) {
  const Coefficients& c = coefficients(h);
  const std::size_t count = 1 + tangents.size();
  if (state_[0].size() != count)
    for (auto s = 0; s < 4; ++s) {
      state_[s].assign(count, Spectrum(modes_));
      nonlin_[s].assign(count, Spectrum(modes_));
    }
  auto input = [&](std::size_t i) -> Spectrum& { return i == 0 ? u : tangents[i - 1]; };

  for (std::size_t i = 0; i < count; ++i) state_[0][i] = input(i);
  evaluate_stage(t, 0, count);

  for (std::size_t i = 0; i < count; ++i) {
    const Spectrum& v = state_[0][i];
    const Spectrum& nv = nonlin_[0][i];
    Spectrum& a = state_[1][i];
    for (std::size_t k = 0; k < modes_; ++k) a[k] = c.e2[k] * v[k] + c.q[k] * nv[k];
  }
  evaluate_stage(t + 0.5 * h, 1, count);

  for (std::size_t i = 0; i < count; ++i) {
    const Spectrum& v = state_[0][i];
    const Spectrum& na = nonlin_[1][i];
    Spectrum& b = state_[2][i];
    for (std::size_t k = 0; k < modes_; ++k) b[k] = c.e2[k] * v[k] + c.q[k] * na[k];
  }
  evaluate_stage(t + 0.5 * h, 2, count);

  for (std::size_t i = 0; i < count; ++i) {
    const Spectrum& a = state_[1][i];
    const Spectrum& nv = nonlin_[0][i];
    const Spectrum& nb = nonlin_[2][i];
    Spectrum& cc = state_[3][i];
    for (std::size_t k = 0; k < modes_; ++k) cc[k] = c.e2[k] * a[k] + c.q[k] * (2.0 * nb[k] - nv[k]);
  }
  evaluate_stage(t + h, 3, count);

  for (std::size_t i = 0; i < count; ++i) {
    Spectrum& v = input(i);
    const Spectrum& nv = nonlin_[0][i];
    const Spectrum& na = nonlin_[1][i];
    const Spectrum& nb = nonlin_[2][i];
    const Spectrum& nc = nonlin_[3][i];
    for (std::size_t k = 0; k < modes_; ++k)
      v[k] = c.e[k] * v[k] + c.f1[k] * nv[k] + 2.0 * c.f2[k] * (na[k] + nb[k]) + c.f3[k] * nc[k];
    v.front() = v.front().real();
    v.back() = v.back().real();
  }
}

bool EtdStepper::exceeds_threshold(const Spectrum& u) {
  double bound = std::abs(u.front()) + std::abs(u.back());
  for (std::size_t k = 1; k + 1 < u.size(); ++k) bound += 2.0 * std::abs(u[k]);
  if (!std::isfinite(bound)) return true;
  if (bound < config_.blowup_threshold) return false;
  fft_for(config_.n).inverse(u, w_);
  for (double v : w_)
    if (!(std::abs(v) < config_.blowup_threshold)) return true;
  return false;
}

GridFunction EtdStepper::step(const GridFunction& u, double t, double h) {
  if (u.size() != config_.n) throw std::invalid_argument("state size does not match solver grid");
  Spectrum s(u.coefficients().begin(), u.coefficients().end());
  advance(s, t, h);
  if (exceeds_threshold(s)) throw BlowUpError(t + h);
  return GridFunction::from_coefficients(config_.n, std::move(s));
}

GridFunction step(const GridFunction& u, const ForcingField& field, double t, double dt, const SolverConfig& config) {
  SolverConfig c = config;
  c.n = u.size();
  EtdStepper stepper(field, c);
  return stepper.step(u, t, dt);
}

Trajectory evolve(const GridFunction& u0, const ForcingField& field, double t_end, const SolverConfig& config,
                  std::size_t sample_stride) {
  if (!(t_end > 0.0)) throw std::invalid_argument("t_end must be positive");
  if (sample_stride == 0) throw std::invalid_argument("sample stride must be positive");
  if (u0.size() != config.n) throw std::invalid_argument("initial state size does not match solver grid");
  EtdStepper stepper(field, config);
  Trajectory traj;
  traj.config = config;
  traj.field = field;
  traj.sample_stride = sample_stride;

  const StepSchedule plan = make_schedule(t_end, config.dt);
  traj.samples.reserve(plan.total() / sample_stride + 2);
  traj.samples.push_back({0.0, u0, hull_phase_at(field, 0.0)});

  Spectrum s(u0.coefficients().begin(), u0.coefficients().end());
  const std::size_t total = plan.total();
  for (std::size_t i = 0; i < total; ++i) {
    const double t = static_cast<double>(i) * config.dt;
    const bool last = i + 1 == total;
    const double h = (last && plan.last_step > 0.0) ? plan.last_step : config.dt;
    stepper.advance(s, t, h);
    const double t_next = last ? t_end : static_cast<double>(i + 1) * config.dt;
    if (stepper.exceeds_threshold(s)) throw BlowUpError(t_next);
    if (last || (i + 1) % sample_stride == 0)
      traj.samples.push_back({t_next, GridFunction::from_coefficients(config.n, s), hull_phase_at(field, t_next)});
  }
  return traj;
}

GridFunction propagate(EtdStepper& stepper, const GridFunction& u, double t0, double t1) {
  if (t1 <= t0) return u;
  const double dt = stepper.config().dt;
  const StepSchedule plan = make_schedule(t1 - t0, dt);
  Spectrum s(u.coefficients().begin(), u.coefficients().end());
  const std::size_t total = plan.total();
  for (std::size_t i = 0; i < total; ++i) {
    const bool last = i + 1 == total;
    const double h = (last && plan.last_step > 0.0) ? plan.last_step : dt;
    const double t = t0 + static_cast<double>(i) * dt;
    stepper.advance(s, t, h);
    if (stepper.exceeds_threshold(s)) throw BlowUpError(t + h);
  }
  return GridFunction::from_coefficients(u.size(), std::move(s));
}

}  // namespace rdcircle
