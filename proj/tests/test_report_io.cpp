#include <doctest.h>

#include <json.hpp>

#include "hemvsa/error.hpp"
#include "hemvsa/report_io.hpp"
#include "hemvsa/vsa.hpp"
#include "support.hpp"

using namespace hemvsa;

TEST_CASE("report record carries every field") {
  const Network ab = testing::bundled("case4_ab");
  VsaReport rep = assess_network(ab, RunConfig{}, 12.0);
  rep.equivalent = ExternalEquivalent{1.02, {{2, 0.01, 0.05}}};
  const auto j = nlohmann::json::parse(report_json(rep));
  CHECK(j.at("time") == 12.0);
  CHECK(j.at("sc").get<double>() == rep.sc);
  CHECK(j.at("vsm_percent").get<double>() == rep.vsm_percent);
  CHECK(j.at("critical_bus") == rep.critical_bus);
  CHECK(j.at("buses").size() == 3);
  CHECK(j.at("buses")[0].contains("p_limit_pu"));
  CHECK(j.at("timing").at("n_ps") == rep.timing.n_ps);
  CHECK(j.at("equivalent").at("z")[0].at("x") == 0.05);
  CHECK(j.at("flags").at("pade_failed") == false);
  CHECK(report_json(rep).find('\n') == std::string::npos);
}

TEST_CASE("P-V curve sampling and its checker") {
  const Network ab = testing::bundled("case4_ab");
  CycleDetail d;
  const auto rep = assess_network(ab, RunConfig{}, 0.0, &d);
  const auto curve = sample_pv_curve(ab, d.hem, &*d.collapse, rep.s_m, 0.05);
  CHECK(curve.bus_ids.size() == 3);
  CHECK(curve.samples.front().s == 0.0);
  CHECK(curve.samples.back().s == rep.sc);
  CHECK(curve.samples.front().source == "series");
  CHECK(curve.samples.back().source == "pade");
  // Voltage falls with loading on every load bus.
  for (std::size_t k = 1; k < curve.samples.size(); ++k)
    for (std::size_t i = 0; i < curve.bus_ids.size(); ++i)
      CHECK(curve.samples[k].v[i] < curve.samples[k - 1].v[i] + 1e-9);

  const auto parsed = parse_pv_curve(write_pv_curve(curve), "pv.csv");
  CHECK(parsed.bus_ids == curve.bus_ids);
  CHECK(parsed.samples.size() == curve.samples.size());
  CHECK(parsed.sc == doctest::Approx(curve.sc).epsilon(1e-11));

  const auto one = sample_pv_curve(ab, d.hem, &*d.collapse, rep.s_m, 0.05, 4);
  CHECK(one.bus_ids == std::vector<int>{4});
  CHECK_THROWS_AS(sample_pv_curve(ab, d.hem, &*d.collapse, rep.s_m, 0.05, 1), std::invalid_argument);
}

TEST_CASE("curve checker rejects malformed files") {
  const std::string head = "# s_m,1\n# sc_coarse,2\n# sc,2.1\ns,source,v_2\n";
  CHECK_NOTHROW(parse_pv_curve(head + "0,series,1\n1,series,0.9\n", "c"));
  CHECK_THROWS_AS(parse_pv_curve("s,source,v_2\n0,series,1\n", "c"), ParseError);
  CHECK_THROWS_AS(parse_pv_curve(head + "1,series,1\n0,series,0.9\n", "c"), ParseError);
  CHECK_THROWS_AS(parse_pv_curve(head + "0,series,-1\n", "c"), ParseError);
  CHECK_THROWS_AS(parse_pv_curve(head + "0,guess,1\n", "c"), ParseError);
  CHECK_THROWS_AS(parse_pv_curve(head + "0,series\n", "c"), ParseError);
  CHECK_THROWS_AS(parse_pv_curve("# s_m,3\n# sc_coarse,2\n# sc,2.1\ns,source,v_2\n", "c"), ParseError);
}
