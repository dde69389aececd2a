#include <doctest.h>

#include <cmath>

#include "hemvsa/embedding_system.hpp"
#include "hemvsa/error.hpp"
#include "hemvsa/germ.hpp"
#include "support.hpp"

using namespace hemvsa;

TEST_CASE("starting voltage without shunts is flat") {
  Bus sl{.id = 1, .kind = BusKind::Slack, .v_slack = {1.03, 0.0}};
  Bus a{.id = 2, .kind = BusKind::PQ, .p_load = 0.5};
  Bus b{.id = 3, .kind = BusKind::PV, .v_sp = 1.0, .p_gen = 0.2};
  const Network n("flat", 100.0, {sl, a, b}, {{1, 2, 0.01, 0.1, 0.0}, {2, 3, 0.01, 0.1, 0.0}});
  for (const auto& v : starting_voltage(n)) CHECK(std::abs(v - Complex(1.03, 0.0)) < 1e-14);

  Bus only{.id = 1, .kind = BusKind::Slack, .v_slack = {0.99, 0.0}};
  Bus load{.id = 2, .kind = BusKind::PQ, .p_load = 1.0};
  const Network two("two", 100.0, {only, load}, {{1, 2, 0.0, 0.2, 0.0}});
  CHECK(std::abs(starting_voltage(two)[1] - Complex(0.99, 0.0)) < 1e-14);
}

TEST_CASE("starting voltage of the 4-bus case solves the zero-injection rows") {
  const Network ab = testing::bundled("case4_ab");
  const auto vst = starting_voltage(ab);
  CHECK(std::abs(vst[0] - Complex(1.02, 0.0)) < 1e-15);
  bool flat = true;
  for (std::size_t i = 1; i < ab.size(); ++i) {
    Complex row{};
    for (std::size_t k = 0; k < ab.size(); ++k)
      row += ab.y()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * vst[k];
    CHECK(std::abs(row) < 1e-12);
    flat = flat && std::abs(vst[i] - vst[0]) < 1e-9;
  }
  CHECK_FALSE(flat);
}

TEST_CASE("germ without PV buses is the starting voltage") {
  const Network ab = testing::bundled("case4_ab");
  const auto g = physical_germ(ab);
  CHECK(g.n_germ == 0);
  const auto vst = starting_voltage(ab);
  for (std::size_t i = 0; i < ab.size(); ++i) {
    CHECK(std::abs(g.germ_voltage[i] - vst[i]) < 1e-15);
    CHECK(g.q_g[i].empty());
  }
}

TEST_CASE("germ system dimension follows 2l+2m+5p") {
  CHECK(EmbeddingSystem::dimension_for(1, 1, 1) == 9);
  const Network tri = testing::three_bus_pv();
  CHECK(physical_germ(tri).system_dimension == 9);
  const Network c = testing::bundled("case4_c");
  CHECK(physical_germ(c).system_dimension == 11);
}

TEST_CASE("case4_c germ reaches the PV set point") {
  const Network c = testing::bundled("case4_c");
  const auto g = physical_germ(c, {1e-6, 30});
  CHECK(g.n_germ <= 10);
  const std::size_t pv = c.index_of(4);
  CHECK(std::abs(std::abs(g.germ_voltage[pv]) - 0.98) < 1e-6);
  CHECK(g.magnitude_error < 1e-6);
}

TEST_CASE("germ consistency and W/V duality") {
  for (const char* name : {"case4_c"}) {
    const Network n = testing::bundled(name);
    const auto g = physical_germ(n);
    CHECK(germ_mismatch(n, g, 1.0) < 1e-8);
    CHECK(germ_mismatch(n, g, 0.0) < 1e-12);
    for (std::size_t i = 0; i < n.size(); ++i) {
      CHECK(g.v_g[i][0] == g.v_start[i]);
      const auto unit = multiply(g.v_g[i], g.w_g[i], g.v_g[i].size());
      CHECK(std::abs(unit[0] - 1.0) < 1e-12);
      for (std::size_t k = 1; k < unit.size(); ++k) CHECK(std::abs(unit[k]) < 1e-10);
      if (n.bus(i).kind == BusKind::Slack)
        for (std::size_t k = 1; k < g.v_g[i].size(); ++k) CHECK(g.v_g[i][k] == Complex{});
    }
  }
  const Network tri = testing::three_bus_pv();
  const auto g = physical_germ(tri);
  CHECK(germ_mismatch(tri, g, 1.0) < 1e-8);
  CHECK(std::abs(std::abs(g.germ_voltage[1]) - 1.02) < 1e-8);
}

TEST_CASE("germ PQ rows carry no injection at any order") {
  const Network c = testing::bundled("case4_c");
  const auto g = physical_germ(c);
  for (std::size_t n = 1; n < g.v_g[0].size(); ++n)
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c.bus(i).kind != BusKind::PQ) continue;
      Complex row{};
      for (std::size_t k = 0; k < c.size(); ++k)
        row += c.y()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * g.v_g[k][n];
      CHECK(std::abs(row) < 1e-10);
    }
}

TEST_CASE("PV bus already at its set point stops at order zero") {
  Bus sl{.id = 1, .kind = BusKind::Slack, .v_slack = {1.0, 0.0}};
  Bus pv{.id = 2, .kind = BusKind::PV, .v_sp = 1.0};
  Bus pq{.id = 3, .kind = BusKind::PQ, .p_load = 0.5, .q_load = 0.1};
  const Network n("set", 100.0, {sl, pv, pq}, {{1, 2, 0.01, 0.1, 0.0}, {2, 3, 0.01, 0.1, 0.0}});
  const auto g = physical_germ(n);
  CHECK(g.n_germ == 0);
  CHECK(g.magnitude_error < 1e-12);

  // With base active output the reactive support has to be found.
  std::vector<Bus> buses = n.buses();
  buses[1].p_gen = 0.3;
  const Network gen("gen", 100.0, buses, n.branches());
  const auto gg = physical_germ(gen);
  CHECK(gg.n_germ > 0);
  CHECK(gg.magnitude_error < 1e-8);
}

TEST_CASE("germ iteration cap is reported") {
  const Network c = testing::bundled("case4_c");
  CHECK_THROWS_AS(physical_germ(c, {1e-14, 2}), NumericError);
}
