#include <doctest.h>

#include <cmath>

#include "hemvsa/oracle.hpp"
#include "hemvsa/scenario.hpp"
#include "support.hpp"

using namespace hemvsa;

TEST_CASE("Newton solves the two-bus circuit in closed form") {
  // Unity power factor load behind j0.1 from a 1.0 pu source:
  // |V|^2 = (1 + sqrt(1 - 4 x^2 p^2)) / 2 on the upper branch.
  const double p = 2.0;
  const Network n = two_bus_case(0.0, 0.1, p, 0.0);
  const auto pf = oracle::newton_pf(n, 1.0);
  REQUIRE(pf.converged);
  const double v2 = 0.5 * (1.0 + std::sqrt(1.0 - 4.0 * 0.01 * p * p));
  CHECK(std::abs(pf.voltages[1]) == doctest::Approx(std::sqrt(v2)).epsilon(1e-12));
  CHECK(pf.power_mismatch < 1e-12);
}

TEST_CASE("Newton on the bundled cases") {
  for (const char* name : {"case4_ab", "case4_c"}) {
    const Network n = testing::bundled(name);
    const auto pf = oracle::newton_pf(n, 1.0);
    CHECK(pf.converged);
    CHECK(pf.iterations < 10);
    CHECK(pf_mismatch(n, pf.voltages, 1.0, pf.q_pv) < 1e-9);
  }
  const Network c = testing::bundled("case4_c");
  const auto pf = oracle::newton_pf(c, 1.0);
  CHECK(std::abs(pf.voltages[c.index_of(4)]) == doctest::Approx(0.98).epsilon(1e-12));
}

TEST_CASE("divergence beyond the nose is reported") {
  const Network n = two_bus_case(0.0, 0.1, 1.0, 0.0);
  const auto pf = oracle::newton_pf(n, 6.0);
  CHECK_FALSE(pf.converged);
}

TEST_CASE("CPF finds the two-bus nose") {
  for (auto [p, q] : {std::pair{1.0, 0.0}, {1.0, 0.5}, {0.0, 1.0}}) {
    const Network n = two_bus_case(0.0, 0.1, p, q);
    const auto tr = oracle::cpf_nose(n, 0.0);
    CHECK(tr.started);
    CHECK_FALSE(tr.reached_cap);
    CHECK(tr.nose_scale == doctest::Approx(two_bus_nose_scale(0.1, p, q)).epsilon(1e-3));
    for (std::size_t k = 1; k < tr.points.size(); ++k) CHECK(tr.points[k].s > tr.points[k - 1].s);
  }
}

TEST_CASE("CPF stops at the cap") {
  const Network n = two_bus_case(0.0, 0.1, 1.0, 0.0);
  oracle::CpfOptions opt;
  opt.s_cap = 2.0;
  const auto tr = oracle::cpf_nose(n, 0.0, opt);
  CHECK(tr.reached_cap);
  CHECK(tr.nose_scale == doctest::Approx(2.0));
}
