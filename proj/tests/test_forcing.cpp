#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rdcircle/forcing.hpp"

using namespace rdcircle;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

QuasiPeriodicSum random_sum(std::mt19937_64& rng, std::size_t terms) {
  std::uniform_real_distribution<double> amp(-1.0, 1.0), freq(0.2, 3.0), ph(0.0, kTwoPi);
  std::vector<SignalTerm> t;
  for (std::size_t k = 0; k < terms; ++k) t.push_back({amp(rng), freq(rng) + 3.0 * static_cast<double>(k), ph(rng)});
  return QuasiPeriodicSum(t, amp(rng));
}

}  // namespace

TEST_CASE("phase helpers wrap onto the circle", "[forcing]") {
  CHECK_THAT(wrap_phase(-0.5), WithinAbs(kTwoPi - 0.5, 1e-15));
  CHECK_THAT(wrap_phase(7.0 * kPi), WithinAbs(kPi, 1e-12));
  CHECK(wrap_phase(kTwoPi) == 0.0);
  CHECK_THAT(phase_gap(0.1, kTwoPi - 0.1), WithinAbs(0.2, 1e-12));
  CHECK(phase_gap(0.0, kPi) <= kPi);
}

TEST_CASE("signal construction rejects bad terms", "[forcing]") {
  CHECK_THROWS_AS(QuasiPeriodicSum({{1.0, 0.0, 0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(QuasiPeriodicSum({{1.0, 1.0, 0.0}, {0.5, 1.0, 0.2}}), std::invalid_argument);
  CHECK_THROWS_AS(QuasiPeriodicSum({{NAN, 1.0, 0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(example61_signal(0.0), std::invalid_argument);
}

TEST_CASE("closed-form antiderivative matches adaptive quadrature", "[forcing][oracle]") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_sum(rng, 1 + trial % 4);
    const double t0 = -5.0 + trial, t1 = t0 + 7.3;
    const double quad = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double t) { return eval_signal(s, t); }, t0, t1, 12, 1e-14);
    CHECK_THAT(integral_signal(s, t0, t1), WithinAbs(quad, 1e-11));
    CHECK_THAT(integral_signal(s, t1) - integral_signal(s, t0), WithinAbs(quad, 1e-11));
  }
}

TEST_CASE("amplitude bound dominates the signal", "[forcing][property]") {
  std::mt19937_64 rng(3);
  const auto s = random_sum(rng, 4);
  std::uniform_real_distribution<double> t(-100.0, 100.0);
  for (int i = 0; i < 1000; ++i) CHECK(std::abs(eval_signal(s, t(rng))) <= s.amplitude_bound() + 1e-14);
}

TEST_CASE("translation shifts time", "[forcing][property]") {
  std::mt19937_64 rng(5);
  const auto s = random_sum(rng, 3);
  for (double tau : {0.3, -2.0, 1234.5}) {
    const auto st = s.translated(tau);
    for (double t : {0.0, 1.7, -9.1}) CHECK_THAT(eval_signal(st, t), WithinAbs(eval_signal(s, t + tau), 1e-10));
  }
}

TEST_CASE("dyadic signal truncation", "[forcing]") {
  const std::size_t k = example61_truncation(1e-12);
  CHECK(k == 42);
  // tail Σ_{j>K} 2^{-j} π = π 2^{-K}
  CHECK(kPi * std::ldexp(1.0, -static_cast<int>(k)) < 1e-12);
  CHECK(kPi * std::ldexp(1.0, -static_cast<int>(k) + 1) >= 1e-12);
  const auto f = example61_signal();
  REQUIRE(f.truncation_count() == k);
  CHECK(f.offset() == 0.0);
  CHECK_THAT(f.terms()[0].amplitude, WithinRel(-kPi / 2.0, 1e-15));
  CHECK_THAT(f.terms()[0].frequency, WithinRel(kPi / 2.0, 1e-15));
}

TEST_CASE("ψ at dyadic times equals the series constant", "[forcing][oracle]") {
  // ∫_0^{2^n} f = Σ_k (cos(2^{n-k}π) - 1): the k = n term gives -2, k < n give 0
  // and k > n give Σ_{j≥1} (cos(π 2^{-j}) - 1), independent of n.
  double tail = 0.0;
  for (int j = 1; j <= 60; ++j) tail += std::cos(kPi * std::ldexp(1.0, -j)) - 1.0;
  const double expected = std::exp(-2.0 + tail);
  const auto f = example61_signal();
  for (int n = 1; n <= 14; ++n)
    CHECK_THAT(std::exp(integral_signal(f, std::ldexp(1.0, n))), WithinRel(expected, 1e-9));
  CHECK(expected >= std::exp(-2.0 * kPi - 2.0));
}

TEST_CASE("reflection symmetry of every field kind", "[forcing][property]") {
  const std::vector<ForcingField> fields = {
      ForcingField::scalar_linear(example61_signal(), -1.0),
      ForcingField::pendulum(QuasiPeriodicSum({{0.3, 1.0, 0.0}}, 0.5), QuasiPeriodicSum({{0.2, std::sqrt(2.0), 0.0}})),
      ForcingField::autonomous_even(bistable_map()),
      ForcingField::autonomous_even(EvenMap{"grad", {{1.0, 1, 0}, {-0.5, 0, 1}, {0.2, 1, 1}}, {}}),
      ForcingField::zero()};
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (const auto& f : fields)
    for (int i = 0; i < 200; ++i) {
      const double t = 10.0 * d(rng), u = d(rng), p = d(rng);
      CHECK(f(t, u, p) == f(t, u, -p));
    }
}

TEST_CASE("analytic partials agree with central differences", "[forcing][oracle]") {
  const auto f = ForcingField::autonomous_even(EvenMap{"grad", {{1.0, 1, 0}, {-1.0, 3, 0}, {0.3, 1, 1}}, {}});
  const auto g = ForcingField::pendulum(QuasiPeriodicSum({{0.3, 1.0, 0.0}}, 0.5), QuasiPeriodicSum({{0.2, 2.0, 1.0}}));
  const double h = 1e-6;
  for (const auto* field : {&f, &g})
    for (double u : {-0.7, 0.1, 1.3})
      for (double p : {-0.4, 0.0, 0.9}) {
        const double t = 0.37;
        const double du = ((*field)(t, u + h, p) - (*field)(t, u - h, p)) / (2 * h);
        const double dp = ((*field)(t, u, p + h) - (*field)(t, u, p - h)) / (2 * h);
        CHECK_THAT(field->du(t, u, p), WithinAbs(du, 1e-7));
        CHECK_THAT(field->dp(t, u, p), WithinAbs(dp, 1e-7));
      }
}

TEST_CASE("pendulum nonlinearity", "[forcing]") {
  const QuasiPeriodicSum a({}, 0.5), b({}, 0.25);
  const auto f = ForcingField::pendulum(a, b);
  const double u = 0.8;
  CHECK_THAT(f(0.0, u, 0.3), WithinAbs(-(0.5 * std::cos(u) + 0.25 * std::sin(u)) * std::sin(u), 1e-15));
}

TEST_CASE("scalar linear rate", "[forcing]") {
  const auto f = ForcingField::scalar_linear(example61_signal(), -1.0);
  double r = 0.0;
  REQUIRE(f.linear_rate(2.5, r));
  CHECK_THAT(r, WithinAbs(eval_signal(example61_signal(), 2.5) + 1.0, 1e-14));
  CHECK_THAT(f(2.5, 3.0, 0.0), WithinAbs(3.0 * r, 1e-13));
  CHECK_FALSE(ForcingField::autonomous_even(bistable_map()).linear_rate(0.0, r));
}

TEST_CASE("hull translation and distance", "[forcing]") {
  const auto f = ForcingField::pendulum(QuasiPeriodicSum({{0.3, 1.0, 0.0}}, 0.5),
                                        QuasiPeriodicSum({{0.2, std::sqrt(2.0), 0.0}}));
  const auto g = translate(f, 3.0);
  for (double t : {0.0, 1.0, 5.5}) CHECK_THAT(g(t, 0.4, 0.0), WithinAbs(f(t + 3.0, 0.4, 0.0), 1e-12));
  CHECK(hull_distance(f, f, 10.0, 64) == 0.0);
  CHECK(hull_distance(f, g, 10.0, 64) > 0.01);
  CHECK_THROWS_AS(hull_distance(f, ForcingField::zero(), 1.0, 8), std::invalid_argument);
  const auto w = f.hull_weights();
  double total = 0.0;
  for (double x : w) total += x;
  CHECK_THAT(total, WithinAbs(1.0, 1e-14));
  CHECK(hull_phase_distance(w, f.hull_phase(), f.hull_phase()) == 0.0);
  // a full period of every frequency is not available, but 2π on the unit frequency alone moves only that phase
  CHECK(hull_phase_distance(w, f.hull_phase(), g.hull_phase()) > 0.0);
}

TEST_CASE("field JSON round trip is bit exact", "[forcing][io]") {
  std::mt19937_64 rng(23);
  const std::vector<ForcingField> fields = {
      translate(ForcingField::scalar_linear(random_sum(rng, 3), -1.0), 0.123456789),
      ForcingField::pendulum(random_sum(rng, 2), random_sum(rng, 2)),
      ForcingField::autonomous_even(bistable_map()),
      ForcingField::scalar_linear(example61_signal(), 0.0)};
  for (const auto& f : fields) {
    const nlohmann::json j = f;
    const auto back = nlohmann::json::parse(j.dump()).get<ForcingField>();
    const nlohmann::json j2 = back;
    CHECK(j == j2);
    for (double t : {0.0, 2.2, 100.0}) CHECK(back(t, 0.3, 0.2) == f(t, 0.3, 0.2));
    REQUIRE(back.hull_phase().size() == f.hull_phase().size());
    for (std::size_t i = 0; i < f.hull_phase().size(); ++i) CHECK(back.hull_phase()[i] == f.hull_phase()[i]);
  }
  EvenMap custom;
  custom.custom = [](double u, double) { return u; };
  const nlohmann::json bad_input = {{"kind", "nope"}};
  CHECK_THROWS_AS(bad_input.get<ForcingField>(), std::invalid_argument);
  nlohmann::json out;
  CHECK_THROWS_AS(to_json(out, ForcingField::autonomous_even(custom)), std::invalid_argument);
}
