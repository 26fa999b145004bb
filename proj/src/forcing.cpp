#include "rdcircle/forcing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rdcircle {

double wrap_phase(double phase) {
  double r = std::fmod(phase, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

double phase_gap(double a, double b) {
  const double d = wrap_phase(a - b);
  return std::min(d, kTwoPi - d);
}

// ---------------------------------------------------------------------------
// QuasiPeriodicSum

QuasiPeriodicSum::QuasiPeriodicSum(std::vector<SignalTerm> terms, double offset)
    : terms_(std::move(terms)), offset_(offset) {
  if (!std::isfinite(offset_)) throw std::invalid_argument("signal offset must be finite");
  for (auto& term : terms_) {
    if (!(term.frequency > 0.0) || !std::isfinite(term.frequency))
      throw std::invalid_argument("signal frequencies must be positive");
    if (!std::isfinite(term.amplitude) || !std::isfinite(term.phase))
      throw std::invalid_argument("signal terms must be finite");
    term.phase = wrap_phase(term.phase);
  }
  for (std::size_t i = 0; i < terms_.size(); ++i)
    for (std::size_t j = i + 1; j < terms_.size(); ++j)
      if (terms_[i].frequency == terms_[j].frequency)
        throw std::invalid_argument("signal frequencies must be distinct");
}

double QuasiPeriodicSum::amplitude_bound() const {
  double bound = std::abs(offset_);
  for (const auto& term : terms_) bound += std::abs(term.amplitude);
  return bound;
}

QuasiPeriodicSum QuasiPeriodicSum::translated(double tau) const {
  QuasiPeriodicSum out = *this;
  for (auto& term : out.terms_) term.phase = wrap_phase(term.phase + term.frequency * tau);
  return out;
}

double eval_signal(const QuasiPeriodicSum& s, double t) {
  double sum = s.offset();
  for (const auto& term : s.terms()) sum += term.amplitude * std::sin(term.frequency * t + term.phase);
  return sum;
}

double integral_signal(const QuasiPeriodicSum& s, double t) {
  // cos θ - cos(ωt + θ) = 2 sin(ωt/2 + θ) sin(ωt/2) avoids cancellation for small ωt.
  double sum = s.offset() * t;
  for (const auto& term : s.terms()) {
    const double half = 0.5 * term.frequency * t;
    sum += term.amplitude / term.frequency * 2.0 * std::sin(half + term.phase) * std::sin(half);
  }
  return sum;
}

double integral_signal(const QuasiPeriodicSum& s, double t0, double t1) {
  // cos(ωt0+θ) - cos(ωt1+θ) = 2 sin(ω(t0+t1)/2 + θ) sin(ω(t1-t0)/2)
  double sum = s.offset() * (t1 - t0);
  for (const auto& term : s.terms()) {
    const double mid = 0.5 * term.frequency * (t0 + t1) + term.phase;
    const double half = 0.5 * term.frequency * (t1 - t0);
    sum += term.amplitude / term.frequency * 2.0 * std::sin(mid) * std::sin(half);
  }
  return sum;
}

std::size_t example61_truncation(double tail_tol) {
  if (!(tail_tol > 0.0)) throw std::invalid_argument("tail tolerance must be positive");
  // Σ_{k>K} 2^{-k}π = 2^{-K}π
  std::size_t k = 1;
  while (std::ldexp(kPi, -static_cast<int>(k)) >= tail_tol) ++k;
  return k;
}

QuasiPeriodicSum example61_signal(double tail_tol) {
  const std::size_t count = example61_truncation(tail_tol);
  std::vector<SignalTerm> terms;
  terms.reserve(count);
  for (std::size_t k = 1; k <= count; ++k) {
    const double w = std::ldexp(kPi, -static_cast<int>(k));
    terms.push_back({-w, w, 0.0});
  }
  return QuasiPeriodicSum(std::move(terms));
}

// ---------------------------------------------------------------------------
// EvenMap

namespace {

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

double map_du(const EvenMap& h, double u, double q) {
  if (h.custom) {
    const double step = 1e-6 * std::max(1.0, std::abs(u));
    return (h.custom(u + step, q) - h.custom(u - step, q)) / (2.0 * step);
  }
  double sum = 0.0;
  for (const auto& m : h.monomials)
    if (m.u_power > 0) sum += m.coeff * m.u_power * ipow(u, m.u_power - 1) * ipow(q, m.q_power);
  return sum;
}

// ∂/∂p of h(u, p²)
double map_dp(const EvenMap& h, double u, double p) {
  if (h.custom) {
    const double step = 1e-6 * std::max(1.0, std::abs(p));
    const double hi = p + step;
    const double lo = p - step;
    return (h.custom(u, hi * hi) - h.custom(u, lo * lo)) / (2.0 * step);
  }
  const double q = p * p;
  double hq = 0.0;
  for (const auto& m : h.monomials)
    if (m.q_power > 0) hq += m.coeff * ipow(u, m.u_power) * m.q_power * ipow(q, m.q_power - 1);
  return 2.0 * p * hq;
}

}  // namespace

double EvenMap::operator()(double u, double q) const {
  if (custom) return custom(u, q);
  double sum = 0.0;
  for (const auto& m : monomials) sum += m.coeff * ipow(u, m.u_power) * ipow(q, m.q_power);
  return sum;
}

bool EvenMap::depends_on_q() const {
  if (custom) return true;
  return std::any_of(monomials.begin(), monomials.end(),
                     [](const Monomial& m) { return m.q_power > 0 && m.coeff != 0.0; });
}

EvenMap bistable_map() {
  EvenMap h;
  h.label = "bistable";
  h.monomials = {{1.0, 1, 0}, {-1.0, 3, 0}};
  return h;
}

std::string to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::scalar_linear: return "scalar_linear";
    case FieldKind::pendulum: return "pendulum";
    case FieldKind::autonomous_even: return "autonomous_even";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// ForcingField

namespace {

template <class Fn>
void for_each_signal(const ForcingField::Spec& spec, Fn&& fn) {
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ScalarLinear>) {
          fn(s.signal);
        } else if constexpr (std::is_same_v<T, Pendulum>) {
          fn(s.a);
          fn(s.b);
        }
      },
      spec);
}

template <class Fn>
void for_each_signal_mut(ForcingField::Spec& spec, Fn&& fn) {
  std::visit(
      [&](auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ScalarLinear>) {
          fn(s.signal);
        } else if constexpr (std::is_same_v<T, Pendulum>) {
          fn(s.a);
          fn(s.b);
        }
      },
      spec);
}

}  // namespace

ForcingField::ForcingField() : ForcingField(ScalarLinear{}) {}

ForcingField::ForcingField(Spec spec) : spec_(std::move(spec)) {
  index_frequencies();
  hull_phase_.assign(frequencies_.size(), 0.0);
  rebuild_effective();
}

ForcingField::ForcingField(Spec spec, std::vector<double> hull_phase) : spec_(std::move(spec)) {
  index_frequencies();
  if (hull_phase.size() != frequencies_.size())
    throw std::invalid_argument("hull phase length does not match the frequency set");
  hull_phase_ = std::move(hull_phase);
  for (double& p : hull_phase_) {
    if (!std::isfinite(p)) throw std::invalid_argument("hull phase must be finite");
    p = wrap_phase(p);
  }
  rebuild_effective();
}

ForcingField ForcingField::zero() { return ForcingField(ScalarLinear{}); }

ForcingField ForcingField::scalar_linear(QuasiPeriodicSum signal, double lambda) {
  return ForcingField(ScalarLinear{std::move(signal), lambda});
}

ForcingField ForcingField::pendulum(QuasiPeriodicSum a, QuasiPeriodicSum b) {
  return ForcingField(Pendulum{std::move(a), std::move(b)});
}

ForcingField ForcingField::autonomous_even(EvenMap h) {
  return ForcingField(AutonomousEven{std::move(h)});
}

void ForcingField::index_frequencies() {
  frequencies_.clear();
  for_each_signal(spec_, [&](const QuasiPeriodicSum& s) {
    for (const auto& term : s.terms()) frequencies_.push_back(term.frequency);
  });
  std::sort(frequencies_.begin(), frequencies_.end());
  frequencies_.erase(std::unique(frequencies_.begin(), frequencies_.end()), frequencies_.end());

  hull_weights_.assign(frequencies_.size(), 0.0);
  double total = 0.0;
  for_each_signal(spec_, [&](const QuasiPeriodicSum& s) {
    for (const auto& term : s.terms()) {
      const auto it = std::lower_bound(frequencies_.begin(), frequencies_.end(), term.frequency);
      const double mass = std::abs(term.amplitude);
      hull_weights_[static_cast<std::size_t>(it - frequencies_.begin())] += mass;
      total += mass;
    }
  });
  if (total > 0.0)
    for (double& w : hull_weights_) w /= total;
}

void ForcingField::rebuild_effective() {
  effective_ = spec_;
  for_each_signal_mut(effective_, [&](QuasiPeriodicSum& s) {
    std::vector<SignalTerm> terms(s.terms().begin(), s.terms().end());
    for (auto& term : terms) {
      const auto it = std::lower_bound(frequencies_.begin(), frequencies_.end(), term.frequency);
      term.phase = wrap_phase(term.phase + hull_phase_[static_cast<std::size_t>(it - frequencies_.begin())]);
    }
    s = QuasiPeriodicSum(std::move(terms), s.offset());
  });
}

FieldKind ForcingField::kind() const { return static_cast<FieldKind>(spec_.index()); }

bool ForcingField::depends_on_gradient() const {
  if (const auto* even = std::get_if<AutonomousEven>(&spec_)) return even->h.depends_on_q();
  return false;
}

bool ForcingField::linear_rate(double t, double& rate) const {
  if (const auto* lin = std::get_if<ScalarLinear>(&effective_)) {
    rate = eval_signal(lin->signal, t) - lin->lambda;
    return true;
  }
  return false;
}

double ForcingField::operator()(double t, double u, double p) const {
  double out = 0.0;
  evaluate(t, std::span<const double>(&u, 1), std::span<const double>(&p, 1), std::span<double>(&out, 1));
  return out;
}

double ForcingField::du(double t, double u, double p) const {
  double gu = 0.0;
  double gp = 0.0;
  partials(t, std::span<const double>(&u, 1), std::span<const double>(&p, 1), std::span<double>(&gu, 1),
           std::span<double>(&gp, 1));
  return gu;
}

double ForcingField::dp(double t, double u, double p) const {
  double gu = 0.0;
  double gp = 0.0;
  partials(t, std::span<const double>(&u, 1), std::span<const double>(&p, 1), std::span<double>(&gu, 1),
           std::span<double>(&gp, 1));
  return gp;
}

void ForcingField::evaluate(double t, std::span<const double> u, std::span<const double> ux,
                            std::span<double> out) const {
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ScalarLinear>) {
          const double rate = eval_signal(s.signal, t) - s.lambda;
          for (std::size_t j = 0; j < u.size(); ++j) out[j] = rate * u[j];
        } else if constexpr (std::is_same_v<T, Pendulum>) {
          const double a = eval_signal(s.a, t);
          const double b = eval_signal(s.b, t);
          for (std::size_t j = 0; j < u.size(); ++j) {
            const double su = std::sin(u[j]);
            out[j] = -(a * std::cos(u[j]) + b * su) * su;
          }
        } else {
          for (std::size_t j = 0; j < u.size(); ++j) out[j] = s.h(u[j], ux[j] * ux[j]);
        }
      },
      effective_);
}

void ForcingField::partials(double t, std::span<const double> u, std::span<const double> ux,
                            std::span<double> gu, std::span<double> gp) const {
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ScalarLinear>) {
          const double rate = eval_signal(s.signal, t) - s.lambda;
          for (std::size_t j = 0; j < u.size(); ++j) {
            gu[j] = rate;
            gp[j] = 0.0;
          }
        } else if constexpr (std::is_same_v<T, Pendulum>) {
          const double a = eval_signal(s.a, t);
          const double b = eval_signal(s.b, t);
          for (std::size_t j = 0; j < u.size(); ++j) {
            gu[j] = -a * std::cos(2.0 * u[j]) - b * std::sin(2.0 * u[j]);
            gp[j] = 0.0;
          }
        } else {
          for (std::size_t j = 0; j < u.size(); ++j) {
            gu[j] = map_du(s.h, u[j], ux[j] * ux[j]);
            gp[j] = map_dp(s.h, u[j], ux[j]);
          }
        }
      },
      effective_);
}

ForcingField translate(const ForcingField& field, double tau) {
  std::vector<double> phase(field.hull_phase().begin(), field.hull_phase().end());
  const auto freqs = field.frequencies();
  for (std::size_t i = 0; i < phase.size(); ++i) phase[i] = wrap_phase(phase[i] + freqs[i] * tau);
  return ForcingField(field.spec(), std::move(phase));
}

double hull_phase_distance(std::span<const double> weights, std::span<const double> a,
                           std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) d += weights[i] * phase_gap(a[i], b[i]);
  return d;
}

namespace {

bool same_structure(const ForcingField& f1, const ForcingField& f2) {
  if (f1.kind() != f2.kind()) return false;
  if (!std::equal(f1.frequencies().begin(), f1.frequencies().end(), f2.frequencies().begin(),
                  f2.frequencies().end()))
    return false;
  if (f1.kind() == FieldKind::autonomous_even) {
    const auto& h1 = std::get<AutonomousEven>(f1.spec()).h;
    const auto& h2 = std::get<AutonomousEven>(f2.spec()).h;
    if (h1.custom || h2.custom) return h1.label == h2.label && !h1.label.empty();
    return h1.monomials == h2.monomials;
  }
  return true;
}

}  // namespace

double hull_distance(const ForcingField& f1, const ForcingField& f2, double window, std::size_t samples) {
  if (!same_structure(f1, f2)) throw std::invalid_argument("incomparable fields");
  if (samples < 2) samples = 2;
  constexpr int kBox = 5;  // (u, p) ∈ [-2, 2]²
  double worst = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = -window + 2.0 * window * static_cast<double>(i) / static_cast<double>(samples - 1);
    for (int iu = 0; iu < kBox; ++iu) {
      const double u = -2.0 + 4.0 * iu / (kBox - 1);
      for (int ip = 0; ip < kBox; ++ip) {
        const double p = -2.0 + 4.0 * ip / (kBox - 1);
        worst = std::max(worst, std::abs(f1(t, u, p) - f2(t, u, p)));
      }
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// JSON

void to_json(nlohmann::json& j, const SignalTerm& term) {
  j = nlohmann::json{{"amplitude", term.amplitude}, {"frequency", term.frequency}, {"phase", term.phase}};
}

void from_json(const nlohmann::json& j, SignalTerm& term) {
  term.amplitude = j.at("amplitude").get<double>();
  term.frequency = j.at("frequency").get<double>();
  term.phase = j.value("phase", 0.0);
}

void to_json(nlohmann::json& j, const QuasiPeriodicSum& s) {
  j = nlohmann::json{{"offset", s.offset()},
                     {"terms", std::vector<SignalTerm>(s.terms().begin(), s.terms().end())}};
}

void from_json(const nlohmann::json& j, QuasiPeriodicSum& s) {
  if (j.contains("preset")) {
    const auto preset = j.at("preset").get<std::string>();
    if (preset != "example61") throw std::invalid_argument("unknown signal preset: " + preset);
    s = example61_signal(j.value("tail_tol", 1e-12));
    return;
  }
  s = QuasiPeriodicSum(j.value("terms", std::vector<SignalTerm>{}), j.value("offset", 0.0));
}

void to_json(nlohmann::json& j, const ForcingField& field) {
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ScalarLinear>) {
          j = nlohmann::json{{"kind", "scalar_linear"}, {"signal", s.signal}, {"lambda", s.lambda}};
        } else if constexpr (std::is_same_v<T, Pendulum>) {
          j = nlohmann::json{{"kind", "pendulum"}, {"a", s.a}, {"b", s.b}};
        } else {
          if (s.h.custom) throw std::invalid_argument("custom even maps cannot be serialized");
          nlohmann::json monomials = nlohmann::json::array();
          for (const auto& m : s.h.monomials) monomials.push_back({m.coeff, m.u_power, m.q_power});
          j = nlohmann::json{{"kind", "autonomous_even"},
                             {"map", {{"label", s.h.label}, {"monomials", monomials}}}};
        }
      },
      field.spec());
  j["hull_phase"] = std::vector<double>(field.hull_phase().begin(), field.hull_phase().end());
}

void from_json(const nlohmann::json& j, ForcingField& field) {
  const auto kind = j.at("kind").get<std::string>();
  ForcingField::Spec spec;
  if (kind == "scalar_linear") {
    spec = ScalarLinear{j.value("signal", QuasiPeriodicSum{}), j.value("lambda", 0.0)};
  } else if (kind == "pendulum") {
    spec = Pendulum{j.value("a", QuasiPeriodicSum{}), j.value("b", QuasiPeriodicSum{})};
  } else if (kind == "autonomous_even") {
    const auto& map = j.at("map");
    EvenMap h;
    if (map.is_string()) {
      if (map.get<std::string>() != "bistable")
        throw std::invalid_argument("unknown even map: " + map.get<std::string>());
      h = bistable_map();
    } else {
      h.label = map.value("label", std::string{});
      for (const auto& m : map.at("monomials"))
        h.monomials.push_back({m.at(0).get<double>(), m.at(1).get<int>(), m.at(2).get<int>()});
      for (const auto& m : h.monomials)
        if (m.u_power < 0 || m.q_power < 0) throw std::invalid_argument("negative monomial power");
    }
    spec = AutonomousEven{std::move(h)};
  } else {
    throw std::invalid_argument("unknown field kind: " + kind);
  }
  if (j.contains("hull_phase"))
    field = ForcingField(std::move(spec), j.at("hull_phase").get<std::vector<double>>());
  else
    field = ForcingField(std::move(spec));
}

}  // namespace rdcircle
