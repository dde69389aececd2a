#include <doctest.h>

#include <cmath>

#include "hemvsa/error.hpp"
#include "hemvsa/oracle.hpp"
#include "hemvsa/scenario.hpp"
#include "hemvsa/vsa.hpp"
#include "support.hpp"

using namespace hemvsa;

TEST_CASE("margin arithmetic") {
  CHECK(vsm_percent(1.05) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(vsm_percent(1.03) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(vsm_percent(1.0) == 0.0);
  CHECK(vsm_percent(0.5) == -50.0);
  CHECK(vsm_percent(3.0) == 200.0);
}

TEST_CASE("linear forecast") {
  const Snapshot prev{0.0, {{2, {1.0, 0.5}}, {3, {0.25, 0.125}}}};
  const Snapshot now{30.0, {{2, {1.5, 0.75}}, {3, {0.5, 0.25}}}};
  const auto f = forecast(now, prev);
  CHECK(f.snapshot.time == 60.0);
  CHECK(f.snapshot.loads.at(2) == Complex(2.0, 1.0));
  CHECK(f.snapshot.loads.at(3) == Complex(0.75, 0.375));
  CHECK_FALSE(f.clamped);

  // Components whose extrapolation changes sign are clamped to zero.
  const Snapshot falling{30.0, {{2, {0.25, 0.5}}, {3, {0.25, 0.0625}}}};
  const auto g = forecast(falling, prev);
  CHECK(g.clamped);
  CHECK(g.snapshot.loads.at(2) == Complex(0.0, 0.5));
  CHECK(g.snapshot.loads.at(3) == Complex(0.25, 0.0));

  CHECK_THROWS_AS(forecast(prev, now), std::invalid_argument);
  CHECK_THROWS_AS(forecast(Snapshot{30.0, {{2, {1.0, 0.0}}}}, prev), std::invalid_argument);
}

TEST_CASE("forecast of a uniform ramp") {
  RampOptions opt;
  opt.max_snapshots = 5;
  const Scenario sc = make_ramp_scenario(testing::bundled("case4_ab"), opt);
  REQUIRE(sc.snapshots.size() == 5);
  for (std::size_t j = 1; j + 1 < sc.snapshots.size(); ++j) {
    const auto f = forecast(sc.snapshots[j], sc.snapshots[j - 1]);
    CHECK(f.snapshot.time == sc.snapshots[j + 1].time);
    for (const auto& [id, s] : f.snapshot.loads) CHECK(std::abs(s - sc.snapshots[j + 1].loads.at(id)) < 1e-12);
  }
}

TEST_CASE("one cycle on a bundled case") {
  const Network ab = testing::bundled("case4_ab");
  const RunConfig cfg;
  CycleDetail d;
  const auto rep = assess_network(ab, cfg, 0.0, &d);
  const double nose = oracle::cpf_nose(ab, 0.0).nose_scale;
  CHECK(rep.sc == doctest::Approx(nose).epsilon(5e-3));
  CHECK(rep.vsm_percent == doctest::Approx(vsm_percent(rep.sc)));
  CHECK_FALSE(rep.alert);
  CHECK(rep.series_converged);
  CHECK_FALSE(rep.pade_failed);
  REQUIRE(rep.buses.size() == 3);
  REQUIRE(d.collapse.has_value());

  // Critical bus carries the lowest continued voltage at sc.
  double lowest = 1e9;
  int id = 0;
  for (const auto& b : rep.buses) {
    if (b.v_mag_at_sc < lowest) lowest = b.v_mag_at_sc, id = b.bus_id;
    CHECK(b.p_limit == doctest::Approx(rep.sc * b.p_load));
    CHECK(b.q_limit == doctest::Approx(rep.sc * b.q_load));
  }
  CHECK(rep.critical_bus == id);

  CHECK(rep.timing.n_ps <= 30);
  CHECK(rep.timing.t_hem() > 0.0);
  CHECK(rep.timing.t_m() == doctest::Approx((rep.timing.t_germ + rep.timing.t_ps) / static_cast<double>(rep.timing.n_ps)));
}

TEST_CASE("alert threshold") {
  const Network ab = testing::bundled("case4_ab");
  RunConfig cfg;
  cfg.alert_threshold_percent = 200.0;
  CHECK(assess_network(ab, cfg).alert);
}

TEST_CASE("Padé failure falls back to the series limit") {
  const Network ab = testing::bundled("case4_ab");
  RunConfig cfg;
  cfg.s_cap = 1.5;
  const auto rep = assess_network(ab, cfg);
  CHECK(rep.pade_failed);
  CHECK(rep.sc == rep.s_m);
  CHECK_FALSE(rep.note.empty());
}

TEST_CASE("configuration checks") {
  CHECK(RunConfig{}.problems().empty());
  RunConfig bad;
  bad.eps_th = 0.0;
  bad.window_k = 1;
  bad.w_z = -1.0;
  CHECK(bad.problems().size() == 3);
}

TEST_CASE("snapshot files") {
  const std::vector<Snapshot> snaps{{0.0, {{2, {1.0, 0.5}}, {3, {2.0, 1.0}}}}, {30.0, {{2, {1.1, 0.55}}, {3, {2.2, 1.1}}}}};
  const auto back = parse_snapshots(write_snapshots(snaps), "s.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[1].time == 30.0);
  CHECK(back[1].loads.at(3) == snaps[1].loads.at(3));
  CHECK(parse_snapshots("t_seconds,bus_id,p_pu,q_pu\n", "s.csv").empty());
  CHECK_THROWS_AS(parse_snapshots("t_seconds,bus_id,p_pu,q_pu\n0,2,1,1\n0,2,1,1\n", "s.csv"), ParseError);
  CHECK_THROWS_AS(parse_snapshots("t_seconds,bus_id,p_pu,q_pu\n30,2,1,1\n0,2,1,1\n", "s.csv"), ParseError);
  CHECK_THROWS_AS(parse_snapshots("t_seconds,bus_id,p_pu,q_pu\n0,2.5,1,1\n", "s.csv"), ParseError);
}

TEST_CASE("replay input checks") {
  RampOptions opt;
  opt.max_snapshots = 4;
  const Scenario sc = make_ramp_scenario(testing::bundled("case4_ab"), opt);
  const RunConfig cfg;
  CHECK(replay(sc.area, sc.measurements, {}, cfg).empty());

  auto wrong_cadence = sc.snapshots;
  wrong_cadence[2].time += 5.0;
  wrong_cadence[3].time += 5.0;
  CHECK_THROWS_AS(replay(sc.area, sc.measurements, wrong_cadence, cfg), ParseError);

  auto missing_bus = sc.snapshots;
  missing_bus[1].loads.erase(missing_bus[1].loads.begin());
  CHECK_THROWS_AS(replay(sc.area, sc.measurements, missing_bus, cfg), ParseError);

  // A window needs two instants at or before the snapshot.
  auto early = sc.snapshots;
  for (auto& s : early) s.time -= 30.0;
  std::vector<BoundaryMeasurement> sparse;
  for (const auto& m : sc.measurements)
    if (m.t >= 3.0) sparse.push_back(m);
  CHECK_THROWS_AS(replay(sc.area, sparse, early, cfg), ParseError);
}

TEST_CASE("replay of a uniform ramp") {
  RampOptions opt;
  opt.max_snapshots = 12;
  const Scenario sc = make_ramp_scenario(testing::bundled("case4_ab"), opt);
  const auto reps = replay(sc.area, sc.measurements, sc.snapshots, RunConfig{});
  REQUIRE(reps.size() == sc.snapshots.size());
  for (std::size_t j = 0; j < reps.size(); ++j) {
    CHECK(reps[j].time == sc.snapshots[j].time);
    REQUIRE(reps[j].equivalent.has_value());
    if (j > 0) CHECK(reps[j].vsm_percent < reps[j - 1].vsm_percent);
  }
}
