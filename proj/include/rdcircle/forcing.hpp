#pragma once

// Almost-periodic time signals and the reflection-symmetric nonlinearity
// f(t, u, p) that drives u_t = u_xx + f(t, u, u_x) on the circle.

#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace rdcircle {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reduces an angle to [0, 2π).
double wrap_phase(double phase);

/// Wrap-around distance between two angles, in [0, π].
double phase_gap(double a, double b);

struct SignalTerm {
  double amplitude = 0.0;
  double frequency = 1.0;  // angular frequency, rad per unit time
  double phase = 0.0;      // rad, kept in [0, 2π)

  bool operator==(const SignalTerm&) const = default;
};

/// offset + Σ_k a_k sin(ω_k t + θ_k) with strictly positive, distinct ω_k.
///
/// The constant offset lets coefficient signals such as a(t) ≡ 1 be written
/// without abusing a zero frequency.
class QuasiPeriodicSum {
 public:
  QuasiPeriodicSum() = default;
  explicit QuasiPeriodicSum(std::vector<SignalTerm> terms, double offset = 0.0);

  std::span<const SignalTerm> terms() const { return terms_; }
  double offset() const { return offset_; }
  std::size_t truncation_count() const { return terms_.size(); }
  bool empty() const { return terms_.empty() && offset_ == 0.0; }

  /// Σ|a_k| + |offset|, an upper bound of |s(t)|.
  double amplitude_bound() const;

  /// Same signal with every phase advanced by ω_k·τ (mod 2π).
  QuasiPeriodicSum translated(double tau) const;

  bool operator==(const QuasiPeriodicSum&) const = default;

 private:
  std::vector<SignalTerm> terms_;
  double offset_ = 0.0;
};

double eval_signal(const QuasiPeriodicSum& s, double t);

/// ∫_0^t s(τ) dτ from the closed-form antiderivative of each sinusoid.
double integral_signal(const QuasiPeriodicSum& s, double t);

/// ∫_{t0}^{t1} s(τ) dτ.
double integral_signal(const QuasiPeriodicSum& s, double t0, double t1);

/// Smallest K with Σ_{k>K} 2^{-k} π < tail_tol.
std::size_t example61_truncation(double tail_tol = 1e-12);

/// f(t) = -Σ_{k=1}^{K} 2^{-k} π sin(2^{-k} π t), K = example61_truncation(tail_tol).
QuasiPeriodicSum example61_signal(double tail_tol = 1e-12);

/// h(u, q) = Σ c·u^i·q^j, evaluated with q = p², so f(t,u,p) = h(u, p²).
/// A custom callable may replace the polynomial; its partials then come from
/// central differences and it cannot be serialized.
struct EvenMap {
  struct Monomial {
    double coeff = 0.0;
    int u_power = 0;
    int q_power = 0;
    bool operator==(const Monomial&) const = default;
  };

  std::string label;
  std::vector<Monomial> monomials;
  std::function<double(double, double)> custom;

  double operator()(double u, double q) const;
  bool depends_on_q() const;
};

/// h(u, q) = u - u³.
EvenMap bistable_map();

struct ScalarLinear {
  QuasiPeriodicSum signal;
  double lambda = 0.0;
};

struct Pendulum {
  QuasiPeriodicSum a;
  QuasiPeriodicSum b;
};

struct AutonomousEven {
  EvenMap h;
};

enum class FieldKind { scalar_linear, pendulum, autonomous_even };

std::string to_string(FieldKind kind);

/// The nonlinearity f(t, u, p) together with its position in the hull.
///
/// Member signals are stored at their reference phases; the hull phase holds
/// one accumulated advance per distinct frequency, and evaluation uses the
/// signals with those advances applied.
class ForcingField {
 public:
  using Spec = std::variant<ScalarLinear, Pendulum, AutonomousEven>;

  ForcingField();  // f ≡ 0
  explicit ForcingField(Spec spec);
  ForcingField(Spec spec, std::vector<double> hull_phase);

  static ForcingField zero();
  static ForcingField scalar_linear(QuasiPeriodicSum signal, double lambda);
  static ForcingField pendulum(QuasiPeriodicSum a, QuasiPeriodicSum b);
  static ForcingField autonomous_even(EvenMap h);

  FieldKind kind() const;
  const Spec& spec() const { return spec_; }

  std::span<const double> frequencies() const { return frequencies_; }
  std::span<const double> hull_phase() const { return hull_phase_; }

  /// Normalized amplitude mass per distinct frequency (sums to 1 when any
  /// oscillating term exists).
  std::span<const double> hull_weights() const { return hull_weights_; }

  double operator()(double t, double u, double p) const;
  double du(double t, double u, double p) const;
  double dp(double t, double u, double p) const;

  /// out[j] = f(t, u[j], ux[j]).
  void evaluate(double t, std::span<const double> u, std::span<const double> ux,
                std::span<double> out) const;

  /// gu[j] = ∂f/∂u, gp[j] = ∂f/∂p at (t, u[j], ux[j]).
  void partials(double t, std::span<const double> u, std::span<const double> ux,
                std::span<double> gu, std::span<double> gp) const;

  /// For scalar_linear fields f = r(t)·u; returns r(t). Otherwise false.
  bool linear_rate(double t, double& rate) const;

  bool depends_on_gradient() const;

  /// Signals with the hull phase applied (what evaluation actually uses).
  const Spec& effective() const { return effective_; }

 private:
  void index_frequencies();
  void rebuild_effective();

  Spec spec_;
  Spec effective_;
  std::vector<double> frequencies_;
  std::vector<double> hull_phase_;
  std::vector<double> hull_weights_;
};

/// f_τ(t, u, p) = f(t + τ, u, p).
ForcingField translate(const ForcingField& field, double tau);

/// max |f1 - f2| over `samples` times in [-window, window] and a fixed
/// (u, p) box. Throws std::invalid_argument("incomparable fields") when the
/// kinds or frequency sets differ.
double hull_distance(const ForcingField& f1, const ForcingField& f2, double window,
                     std::size_t samples);

/// Amplitude-weighted wrap-around distance between two hull phase vectors.
double hull_phase_distance(std::span<const double> weights, std::span<const double> a,
                           std::span<const double> b);

void to_json(nlohmann::json& j, const SignalTerm& term);
void from_json(const nlohmann::json& j, SignalTerm& term);
void to_json(nlohmann::json& j, const QuasiPeriodicSum& s);
void from_json(const nlohmann::json& j, QuasiPeriodicSum& s);
void to_json(nlohmann::json& j, const ForcingField& field);
void from_json(const nlohmann::json& j, ForcingField& field);

}  // namespace rdcircle
