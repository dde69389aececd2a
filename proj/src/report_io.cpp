#include "hemvsa/report_io.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "hemvsa/error.hpp"

namespace hemvsa {

std::string report_json(const VsaReport& r) {
  nlohmann::ordered_json j;
  j["time"] = r.time;
  j["s_m"] = r.s_m;
  j["sc_coarse"] = r.sc_coarse;
  j["sc"] = r.sc;
  j["vsm_percent"] = r.vsm_percent;
  j["critical_bus"] = r.critical_bus;
  j["alert"] = r.alert;
  auto& buses = j["buses"] = nlohmann::ordered_json::array();
  for (const auto& b : r.buses) {
    buses.push_back({{"id", b.bus_id},
                     {"sc", b.sc},
                     {"v_mag_at_sc", b.v_mag_at_sc},
                     {"p_pu", b.p_load},
                     {"q_pu", b.q_load},
                     {"p_limit_pu", b.p_limit},
                     {"q_limit_pu", b.q_limit},
                     {"pade", {b.pade_l, b.pade_m}}});
  }
  j["timing"] = {{"t_germ", r.timing.t_germ}, {"t_ps", r.timing.t_ps},   {"t_pade", r.timing.t_pade},
                 {"t_hem", r.timing.t_hem()},  {"n_germ", r.timing.n_germ}, {"n_ps", r.timing.n_ps},
                 {"t_m", r.timing.t_m()}};
  if (r.equivalent) {
    nlohmann::ordered_json eq;
    eq["e"] = r.equivalent->e;
    auto& z = eq["z"] = nlohmann::ordered_json::array();
    for (const auto& b : r.equivalent->z) z.push_back({{"bus", b.bus_id}, {"r", b.r}, {"x", b.x}});
    j["equivalent"] = eq;
  }
  j["flags"] = {{"forecast_clamped", r.forecast_clamped},
                {"equivalent_degraded", r.equivalent_degraded},
                {"pade_failed", r.pade_failed},
                {"series_converged", r.series_converged}};
  if (!r.note.empty()) j["note"] = r.note;
  return j.dump();
}

PvCurve sample_pv_curve(const Network& network, const HemSolution& hem, const CollapseResult* collapse,
                        double s_m, double step, int bus_id) {
  PvCurve curve;
  curve.s_m = s_m;
  curve.sc_coarse = collapse ? collapse->sc_coarse : s_m;
  curve.sc = collapse ? collapse->sc : s_m;

  std::vector<std::size_t> index;
  for (std::size_t i = 0; i < network.size(); ++i) {
    const Bus& b = network.bus(i);
    if (b.kind == BusKind::Slack) continue;
    if (bus_id >= 0 && b.id != bus_id) continue;
    index.push_back(i);
    curve.bus_ids.push_back(b.id);
  }
  if (bus_id >= 0 && index.empty())
    throw std::invalid_argument("pv curve: no non-slack bus " + std::to_string(bus_id));

  const VoltageContinuation cont(network, hem);
  auto sample = [&](double s, bool pade) {
    PvSample ps{s, pade ? "pade" : "series", {}};
    const auto raw = pade ? cont.voltages_at(s) : hem.voltages_at(s);
    for (std::size_t i : index) {
      Complex v = raw[i];
      if (pade && collapse)
        if (auto c = collapse->voltage_at(network.bus(i).id, s)) v = *c;
      ps.v.push_back(std::abs(v));
    }
    curve.samples.push_back(std::move(ps));
  };

  std::size_t k = 0;
  for (; static_cast<double>(k) * step <= s_m; ++k) sample(static_cast<double>(k) * step, false);
  if (collapse) {
    for (; static_cast<double>(k) * step < curve.sc; ++k) sample(static_cast<double>(k) * step, true);
    sample(curve.sc, true);
  }
  return curve;
}

std::string write_pv_curve(const PvCurve& c) {
  std::ostringstream out;
  out << std::setprecision(12);
  out << "# s_m," << c.s_m << "\n# sc_coarse," << c.sc_coarse << "\n# sc," << c.sc << "\ns,source";
  for (int id : c.bus_ids) out << ",v_" << id;
  out << '\n';
  for (const auto& p : c.samples) {
    out << p.s << ',' << p.source;
    for (double v : p.v) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

PvCurve parse_pv_curve(const std::string& text, const std::string& source) {
  PvCurve c;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool have_m = false, have_coarse = false, have_sc = false, header = false;
  auto fields = [](const std::string& l) {
    std::vector<std::string> out;
    std::stringstream ss(l);
    std::string f;
    while (std::getline(ss, f, ',')) out.push_back(f);
    return out;
  };
  auto number = [&](const std::string& s, const std::string& where) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used == s.size() && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
    throw ParseError(where, "not a finite number: '" + s + "'");
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    const auto f = fields(line);
    if (line[0] == '#') {
      if (f.size() != 2) throw ParseError(where, "marker line needs '# name,value'");
      const double v = number(f[1], where);
      if (f[0] == "# s_m") c.s_m = v, have_m = true;
      else if (f[0] == "# sc_coarse") c.sc_coarse = v, have_coarse = true;
      else if (f[0] == "# sc") c.sc = v, have_sc = true;
      continue;
    }
    if (!header) {
      if (f.size() < 3 || f[0] != "s" || f[1] != "source") throw ParseError(where, "bad header");
      for (std::size_t k = 2; k < f.size(); ++k) {
        if (f[k].rfind("v_", 0) != 0) throw ParseError(where, "column '" + f[k] + "' is not v_<id>");
        c.bus_ids.push_back(static_cast<int>(number(f[k].substr(2), where)));
      }
      header = true;
      continue;
    }
    if (f.size() != c.bus_ids.size() + 2) throw ParseError(where, "column count differs from header");
    PvSample p{number(f[0], where), f[1], {}};
    if (p.source != "series" && p.source != "pade") throw ParseError(where, "unknown source '" + p.source + "'");
    if (!c.samples.empty() && p.s < c.samples.back().s) throw ParseError(where, "s decreases");
    for (std::size_t k = 2; k < f.size(); ++k) {
      const double v = number(f[k], where);
      if (!(v > 0.0)) throw ParseError(where, "non-positive voltage magnitude");
      p.v.push_back(v);
    }
    c.samples.push_back(std::move(p));
  }
  if (!have_m || !have_coarse || !have_sc) throw ParseError(source, "missing s_m / sc_coarse / sc marker");
  if (!header) throw ParseError(source, "missing header");
  if (!(c.s_m <= c.sc_coarse + 1e-12)) throw ParseError(source, "s_m exceeds sc_coarse");
  return c;
}

}  // namespace hemvsa
