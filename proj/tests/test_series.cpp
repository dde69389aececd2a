#include <doctest.h>

#include <cmath>

#include "hemvsa/series.hpp"
#include "support.hpp"

using namespace hemvsa;

namespace {

PowerSeries naive_product(const PowerSeries& a, const PowerSeries& b) {
  std::vector<Complex> c(a.size() + b.size() - 1);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
  return PowerSeries(c);
}

// Taylor coefficients of sqrt(1 + s^2).
double sqrt_one_plus_s2(std::size_t n) {
  if (n % 2) return 0.0;
  const std::size_t k = n / 2;
  double c = 1.0;  // binomial(1/2, k)
  for (std::size_t j = 0; j < k; ++j) c *= (0.5 - static_cast<double>(j)) / static_cast<double>(j + 1);
  return c;
}

}  // namespace

TEST_CASE("convolution sums") {
  const PowerSeries ones{1.0, 1.0, 1.0, 1.0, 1.0};
  CHECK(convolve_at(ones, ones, 3, 0, 3) == Complex(4.0, 0.0));
  CHECK(convolve_at(ones, ones, 3, 2, 1) == Complex(0.0, 0.0));

  const auto a = testing::random_series(10, 1);
  const auto b = testing::random_series(10, 2);
  const auto ref = naive_product(a, b);
  const auto prod = multiply(a, b, 10);
  for (std::size_t n = 0; n < 10; ++n) {
    CHECK(std::abs(convolve_at(a, b, n, 0, n) - ref[n]) < 1e-14);
    CHECK(std::abs(prod[n] - ref[n]) < 1e-14);
  }
  // Swapping the factors mirrors the bounds.
  for (std::size_t n = 1; n < 10; ++n)
    CHECK(std::abs(convolve_at(a, b, n, 1, n) - convolve_at(b, a, n, 0, n - 1)) < 1e-14);
}

TEST_CASE("convolution is bilinear") {
  const auto a = testing::random_series(8, 3);
  const auto b = testing::random_series(8, 4);
  const auto c = testing::random_series(8, 5);
  const Complex k(0.3, -1.2);
  std::vector<Complex> mix(8);
  for (std::size_t i = 0; i < 8; ++i) mix[i] = a[i] + k * b[i];
  const PowerSeries m(mix);
  for (std::size_t n = 0; n < 8; ++n)
    CHECK(std::abs(convolve_at(m, c, n, 0, n) - convolve_at(a, c, n, 0, n) - k * convolve_at(b, c, n, 0, n)) <
          1e-13);
}

TEST_CASE("reciprocal recurrence") {
  const auto w_const = reciprocal(PowerSeries{Complex(2.0, 1.0), 0.0, 0.0, 0.0});
  CHECK(std::abs(w_const[0] - 1.0 / Complex(2.0, 1.0)) < 1e-15);
  for (std::size_t n = 1; n < 4; ++n) CHECK(std::abs(w_const[n]) == 0.0);

  const Complex v0(0.9, 0.2), v1(-0.3, 0.4);
  const auto w = reciprocal(PowerSeries{v0, v1});
  CHECK(std::abs(w[1] + v1 / (v0 * v0)) < 1e-15);

  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    const auto v = testing::random_series(20, seed);
    const auto inv = reciprocal(v);
    const auto unit = multiply(v, inv, 20);
    CHECK(std::abs(unit[0] - 1.0) < 1e-12);
    for (std::size_t n = 1; n < 20; ++n) CHECK(std::abs(unit[n]) < 1e-12);
  }
  CHECK_THROWS_AS(reciprocal_step(PowerSeries{0.0, 1.0}, PowerSeries{}, 1), std::domain_error);
}

TEST_CASE("magnitude recurrence") {
  const auto m_const = magnitude(PowerSeries{1.7, 0.0, 0.0});
  CHECK(m_const[0] == doctest::Approx(1.7));
  CHECK(m_const[1] == 0.0);

  const auto m = magnitude(PowerSeries{1.0, Complex(0.0, 1.0), 0.0, 0.0, 0.0, 0.0, 0.0});
  for (std::size_t n = 0; n < 7; ++n) CHECK(m[n] == doctest::Approx(sqrt_one_plus_s2(n)).epsilon(1e-14));

  for (std::uint64_t seed = 20; seed < 25; ++seed) {
    // A degree-19 polynomial; M is carried to 60 terms so truncation stays
    // below the check at s = 0.5.
    auto v = testing::random_series(20, seed, 1.0, 0.25);
    v.resize(60);
    const auto mag = magnitude(v);
    for (double s : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}) {
      const double ms = mag.eval(s);
      CHECK(std::abs(ms * ms - std::norm(v.eval(s))) < 1e-10);
    }
  }
  CHECK_THROWS_AS(magnitude_step(PowerSeries{0.0, 1.0}, RealSeries{0.0}, 1), std::domain_error);
}

TEST_CASE("evaluation") {
  CHECK(PowerSeries{1.0, 1.0, 1.0}.eval(0.5) == Complex(1.75, 0.0));
  const auto r = testing::random_series(12, 30);
  CHECK(r.eval(0.0) == r[0]);

  std::vector<Complex> g(40, Complex(1.0, 0.0));
  const PowerSeries geo(g);
  const double err = std::abs(geo.eval(0.9) - 10.0) / 10.0;
  // The tail of a 40-term truncation at 0.9 sums to 0.9^40 / 0.1.
  const double tail = std::pow(0.9, 40) / 0.1 / 10.0;
  CHECK(err == doctest::Approx(tail).epsilon(1e-9));
  CHECK(err <= std::pow(0.9, 41) / 0.1);
}

TEST_CASE("derivative and division") {
  const PowerSeries p{1.0, 2.0, 3.0, 4.0};
  const auto d = derivative(p);
  REQUIRE(d.size() == 3);
  CHECK(d[0] == Complex(2.0, 0.0));
  CHECK(d[2] == Complex(12.0, 0.0));

  const auto a = testing::random_series(12, 40);
  const auto b = testing::random_series(12, 41);
  const auto q = divide(multiply(a, b, 12), b, 12);
  for (std::size_t n = 0; n < 12; ++n) CHECK(std::abs(q[n] - a[n]) < 1e-10);
}
