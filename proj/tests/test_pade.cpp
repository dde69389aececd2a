#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "hemvsa/error.hpp"
#include "hemvsa/germ.hpp"
#include "hemvsa/hem.hpp"
#include "hemvsa/oracle.hpp"
#include "hemvsa/pade.hpp"
#include "hemvsa/scenario.hpp"
#include "support.hpp"

using namespace hemvsa;

namespace {

// Taylor coefficients of num/den through order n - 1.
PowerSeries reexpand(const PadeApproximant& p, std::size_t n) {
  std::vector<Complex> num(n), den(n);
  for (std::size_t k = 0; k < n; ++k) {
    num[k] = k < p.num.size() ? p.num[k] : Complex{};
    den[k] = k < p.den.size() ? p.den[k] : Complex{};
  }
  return divide(PowerSeries(num), PowerSeries(den), n);
}

PowerSeries exp_series(std::size_t n) {
  std::vector<Complex> c(n);
  double f = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    c[k] = 1.0 / f;
    f *= static_cast<double>(k + 1);
  }
  return PowerSeries(c);
}

PowerSeries geometric(std::size_t n, double a = 1.0) {
  std::vector<Complex> c(n);
  for (std::size_t k = 0; k < n; ++k) c[k] = std::pow(a, static_cast<double>(k));
  return PowerSeries(c);
}

struct Fixture {
  Network net;
  HemSolution hem;
};

Fixture prepared(const Network& n, std::size_t terms = 40) {
  return {n, hem_expand(n, physical_germ(n), {1e-6, 60, terms})};
}

}  // namespace

TEST_CASE("geometric series [0/1]") {
  const auto p = pade_approximant(geometric(2), 0, 1);
  REQUIRE(p.den.size() == 2);
  CHECK(std::abs(p.num[0] - 1.0) < 1e-15);
  CHECK(std::abs(p.den[1] + 1.0) < 1e-15);
  const auto poles = p.poles();
  REQUIRE(poles.size() == 1);
  CHECK(poles[0] == Complex(1.0, 0.0));
}

TEST_CASE("exponential [2/2]") {
  const auto p = pade_approximant(exp_series(5), 2, 2);
  const double num[] = {1.0, 0.5, 1.0 / 12.0};
  const double den[] = {1.0, -0.5, 1.0 / 12.0};
  for (int k = 0; k < 3; ++k) {
    CHECK(std::abs(p.num[static_cast<std::size_t>(k)] - num[k]) < 1e-12);
    CHECK(std::abs(p.den[static_cast<std::size_t>(k)] - den[k]) < 1e-12);
  }
  const auto r = reexpand(p, 5);
  const auto e = exp_series(5);
  for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(r[k] - e[k]) < 1e-12);
}

TEST_CASE("approximants re-expand to their input") {
  for (std::uint64_t seed = 60; seed < 70; ++seed) {
    const auto s = testing::random_series(12, seed);
    for (auto [L, M] : {std::pair<std::size_t, std::size_t>{5, 6}, {6, 5}, {5, 5}, {3, 4}}) {
      auto p = try_pade(s, L, M);
      if (!p) continue;
      const auto r = reexpand(*p, L + M + 1);
      for (std::size_t k = 0; k <= L + M; ++k) CHECK(std::abs(r[k] - s[k]) < 1e-9);
    }
  }
  const Network ab = testing::bundled("case4_ab");
  const auto fx = prepared(ab);
  for (std::size_t i = 1; i < ab.size(); ++i) {
    const auto [L, M] = near_diagonal_orders(21);
    const auto p = pade_approximant(fx.hem.v[i], L, M);
    const auto r = reexpand(p, 21);
    for (std::size_t k = 0; k < 21; ++k) CHECK(std::abs(r[k] - fx.hem.v[i][k]) < 1e-9);
  }
}

TEST_CASE("bad orders and degenerate blocks") {
  CHECK_THROWS_AS(pade_approximant(geometric(5), 1, 3), std::invalid_argument);
  CHECK_THROWS_AS(pade_approximant(geometric(3), 2, 2), std::invalid_argument);
  // A rational function of degree [0/1] leaves every larger block singular.
  CHECK_FALSE(try_pade(geometric(9), 4, 4).has_value());
  CHECK_THROWS_AS(pade_approximant(geometric(9), 4, 4), NumericError);
}

TEST_CASE("near-diagonal orders") {
  CHECK(near_diagonal_orders(1) == std::pair<std::size_t, std::size_t>{0, 0});
  CHECK(near_diagonal_orders(2) == std::pair<std::size_t, std::size_t>{0, 1});
  CHECK(near_diagonal_orders(21) == std::pair<std::size_t, std::size_t>{10, 10});
  CHECK(near_diagonal_orders(22) == std::pair<std::size_t, std::size_t>{10, 11});
}

TEST_CASE("polynomial roots") {
  // (s - 2)(s + 1)(s - 0.5j)
  const std::vector<Complex> c = {Complex(0, 1), Complex(-2, 0.5), Complex(-1, -0.5), 1.0};
  auto r = polynomial_roots(c);
  REQUIRE(r.size() == 3);
  for (Complex want : {Complex(2, 0), Complex(-1, 0), Complex(0, 0.5)})
    CHECK(std::any_of(r.begin(), r.end(), [&](Complex z) { return std::abs(z - want) < 1e-12; }));
  const std::vector<Complex> padded = {2.0, -1.0, 1e-20};
  r = polynomial_roots(padded);
  REQUIRE(r.size() == 1);
  CHECK(std::abs(r[0] - 2.0) < 1e-12);
}

TEST_CASE("Froissart doublets are filtered") {
  // 1 / (1 - s/3) plus a tiny pole-zero pair near s = 1.5 and noise.
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 1e-13);
  const Complex a = 1.5, eps = 1e-9;
  std::vector<Complex> c(20);
  for (std::size_t k = 0; k < c.size(); ++k) {
    const double kk = static_cast<double>(k);
    c[k] = std::pow(1.0 / 3.0, kk) - eps * std::pow(1.0 / a, kk + 1.0) + noise(rng);
  }
  const PowerSeries s(c);
  bool saw_doublet = false;
  for (std::size_t n = 6; n <= 19; ++n) {
    const auto [L, M] = near_diagonal_orders(n);
    auto p = try_pade(s, L, M);
    if (!p) continue;
    const auto poles = p->poles();
    const auto zeros = p->zeros();
    for (auto pole : poles)
      for (auto zero : zeros)
        if (std::abs(pole - zero) < kFroissartDistance) saw_doublet = true;
    const auto genuine = genuine_poles(*p);
    for (auto pole : genuine)
      for (auto zero : zeros) CHECK(std::abs(pole - zero) >= kFroissartDistance);
    const auto pick = nearest_real_pole(*p, 0.0);
    REQUIRE(pick.pole.has_value());
    CHECK(*pick.pole == doctest::Approx(3.0).epsilon(1e-6));
  }
  CHECK(saw_doublet);
}

TEST_CASE("admissible pole rule") {
  PadeApproximant p;
  p.num = {1.0};
  // Poles at 2 +/- 0.5j (rejected, too far off axis) and 4 (kept).
  const Complex r1(2, 0.5), r2(2, -0.5), r3(4, 0);
  const Complex i1 = 1.0 / r1, i2 = 1.0 / r2, i3 = 1.0 / r3;
  p.den = {1.0, -(i1 + i2 + i3), i1 * i2 + i1 * i3 + i2 * i3, -i1 * i2 * i3};
  p.L = 0;
  p.M = 3;
  const auto pick = nearest_real_pole(p, 0.0);
  REQUIRE(pick.pole.has_value());
  CHECK(*pick.pole == doctest::Approx(4.0));
  CHECK_FALSE(nearest_real_pole(p, 5.0).pole.has_value());
}

TEST_CASE("collapse pole of a square-root branch") {
  // sqrt(1 - s/2.5): fold at s = 2.5.
  std::vector<Complex> c(30);
  double b = 1.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    c[k] = b * std::pow(-1.0 / 2.5, static_cast<double>(k));
    b *= (0.5 - static_cast<double>(k)) / static_cast<double>(k + 1);
  }
  const auto pick = collapse_pole(PowerSeries(c), 30, 0.0);
  REQUIRE(pick.pole.has_value());
  CHECK(*pick.pole == doctest::Approx(2.5).epsilon(1e-6));
}

TEST_CASE("series limit") {
  const Network ab = testing::bundled("case4_ab");
  std::map<int, Complex> zero;
  for (const auto& b : ab.buses())
    if (b.kind == BusKind::PQ) zero[b.id] = {};
  const auto idle = prepared(ab.with_loads(zero), 10);
  CHECK(series_limit(idle.hem, idle.net, 1e-6) == 20.0);

  const auto fx = prepared(ab);
  const double nose = oracle::cpf_nose(ab, 0.0).nose_scale;
  const double s_m = series_limit(fx.hem, fx.net, 1e-5);
  CHECK(s_m > 1.0);
  CHECK(s_m < nose);
  CHECK(series_limit(fx.hem, fx.net, std::numeric_limits<double>::infinity()) == 20.0);
}

TEST_CASE("two-stage continuation on case4_ab") {
  const Network ab = testing::bundled("case4_ab");
  const auto fx = prepared(ab, 26);
  const double nose = oracle::cpf_nose(ab, 0.0).nose_scale;
  const auto r = find_collapse(fx.hem, fx.net);
  CHECK(r.s_m <= r.sc_coarse);
  CHECK(std::abs(r.sc - r.sc_coarse) / r.sc_coarse <= 0.1);
  CHECK(std::abs(r.sc - nose) / nose < 5e-3);
  REQUIRE(r.per_bus.size() == 3);
  double lo = 1e300, hi = 0.0;
  for (const auto& b : r.per_bus) {
    lo = std::min(lo, b.sc);
    hi = std::max(hi, b.sc);
    CHECK(b.L + b.M + 1 <= fx.hem.terms());
    CHECK(b.M + 1 >= b.L);
  }
  CHECK(r.sc == lo);
  // Uniform scaling: every bus crosses its limit together.
  CHECK((hi - lo) / lo < 2e-3);
}

TEST_CASE("coarse stage lands near the nose" * doctest::may_fail()) {
  // Tight bounds on the coarse estimate alone; the refined estimate carries
  // the accuracy and the coarse one is only required within 10% of it.
  const Network ab = testing::bundled("case4_ab");
  const auto fx = prepared(ab, 26);
  const double nose = oracle::cpf_nose(ab, 0.0).nose_scale;
  CHECK(std::abs(find_collapse(fx.hem, fx.net).sc_coarse - nose) / nose < 0.02);

  const auto two = prepared(two_bus_case(0.0, 0.1, 1.0, 0.0), 26);
  CHECK(std::abs(find_collapse(two.hem, two.net).sc_coarse - 5.0) / 5.0 < 0.01);
}

TEST_CASE("two-bus closed form") {
  CHECK(two_bus_nose_scale(0.1, 1.0, 0.0) == doctest::Approx(5.0));
  for (auto [p, q] : {std::pair{1.0, 0.0}, {1.0, 0.5}, {0.6, 0.3}, {0.0, 1.0}}) {
    const auto fx = prepared(two_bus_case(0.0, 0.1, p, q), 26);
    const double exact = two_bus_nose_scale(0.1, p, q);
    const auto r = find_collapse(fx.hem, fx.net);
    CHECK(r.sc == doctest::Approx(exact).epsilon(1e-2));
    CHECK(r.s_m <= r.sc_coarse);
  }
}

TEST_CASE("continuation is deterministic") {
  const Network c = testing::bundled("case4_c");
  const auto a = prepared(c, 26);
  const auto b = prepared(c, 26);
  const auto ra = find_collapse(a.hem, a.net);
  const auto rb = find_collapse(b.hem, b.net);
  CHECK(ra.sc == rb.sc);
  CHECK(ra.sc_coarse == rb.sc_coarse);
  REQUIRE(ra.per_bus.size() == rb.per_bus.size());
  for (std::size_t i = 0; i < ra.per_bus.size(); ++i) {
    CHECK(ra.per_bus[i].sc == rb.per_bus[i].sc);
    CHECK(ra.per_bus[i].L == rb.per_bus[i].L);
  }
}

TEST_CASE("no collapse below the cap") {
  const Network ab = testing::bundled("case4_ab");
  const auto fx = prepared(ab, 26);
  ContinuationOptions opt;
  opt.s_cap = 1.5;
  CHECK_THROWS_AS(find_collapse(fx.hem, fx.net, opt), NumericError);
}
