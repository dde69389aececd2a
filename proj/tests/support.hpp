#pragma once

#include <random>
#include <string>

#include "hemvsa/netmodel.hpp"
#include "hemvsa/series.hpp"

namespace testing {

inline hemvsa::Network bundled(const std::string& name) {
  return hemvsa::parse_case(hemvsa::resolve_case_path(name));
}

// Coefficients uniform in the disk of radius `spread`, leading one on |z| = lead.
inline hemvsa::PowerSeries random_series(std::size_t n, std::uint64_t seed, double lead = 1.0,
                                         double spread = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<hemvsa::Complex> c(n);
  for (auto& z : c) {
    do z = {u(rng), u(rng)};
    while (std::abs(z) > 1.0);
    z *= spread;
  }
  c[0] = std::polar(lead, u(rng));
  return hemvsa::PowerSeries(std::move(c));
}

// One slack, one PV and one PQ bus in a triangle.
inline hemvsa::Network three_bus_pv() {
  using namespace hemvsa;
  Bus sl{.id = 1, .kind = BusKind::Slack, .v_slack = {1.0, 0.0}};
  Bus pv{.id = 2, .kind = BusKind::PV, .v_sp = 1.02, .p_gen = 0.4, .alpha = 0.1};
  Bus pq{.id = 3, .kind = BusKind::PQ, .p_load = 0.8, .q_load = 0.3};
  return Network("three_bus", 100.0, {sl, pv, pq},
                 {{1, 2, 0.01, 0.08, 0.02}, {1, 3, 0.02, 0.1, 0.02}, {2, 3, 0.015, 0.09, 0.0}});
}

}  // namespace testing
