#include "hemvsa/vsa.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "hemvsa/error.hpp"
#include "hemvsa/germ.hpp"
#include "hemvsa/textio.hpp"

namespace hemvsa {

std::vector<std::string> RunConfig::problems() const {
  std::vector<std::string> out;
  auto positive = [&](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) out.push_back(std::string(name) + " must be positive");
  };
  positive(tol_germ, "tol_germ");
  positive(tol_pfe, "tol_pfe");
  positive(eps_th, "eps_th");
  positive(scan_step, "scan_step");
  positive(s_cap, "s_cap");
  positive(cadence_seconds, "cadence_seconds");
  if (max_terms_germ < 1) out.push_back("max_terms_germ must be at least 1");
  if (max_terms_ps < 2) out.push_back("max_terms_ps must be at least 2");
  if (window_k < 2) out.push_back("window_k must be at least 2");
  if (w_e < 0 || w_z < 0 || w_x < 0) out.push_back("identification weights must be non-negative");
  if (!std::isfinite(alert_threshold_percent)) out.push_back("alert_threshold_percent must be finite");
  return out;
}

Forecast forecast(const Snapshot& now, const Snapshot& prev) {
  if (!(prev.time < now.time)) throw std::invalid_argument("forecast: snapshots out of order");
  if (now.loads.size() != prev.loads.size())
    throw std::invalid_argument("forecast: bus sets differ");
  Forecast out;
  out.snapshot.time = now.time + (now.time - prev.time);
  for (const auto& [id, s_now] : now.loads) {
    auto it = prev.loads.find(id);
    if (it == prev.loads.end()) throw std::invalid_argument("forecast: bus sets differ");
    Complex f = 2.0 * s_now - it->second;
    double p = f.real(), q = f.imag();
    if (p * s_now.real() < 0.0) {
      p = 0.0;
      out.clamped = true;
    }
    if (q * s_now.imag() < 0.0) {
      q = 0.0;
      out.clamped = true;
    }
    out.snapshot.loads[id] = {p, q};
  }
  return out;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

VsaReport assess_network(const Network& network, const RunConfig& config, double time, CycleDetail* detail) {
  VsaReport rep;
  rep.time = time;

  const GermSolution germ = physical_germ(network, {config.tol_germ, config.max_terms_germ});
  HemOptions hopt;
  hopt.tol_pfe = config.tol_pfe;
  hopt.max_terms = std::max(config.max_terms_ps, config.continuation_terms);
  hopt.min_terms = config.continuation_terms;
  HemSolution hem = hem_expand(network, germ, hopt);
  rep.series_converged = hem.converged;

  rep.timing.t_germ = germ.seconds;
  rep.timing.n_germ = germ.n_germ;
  rep.timing.t_ps = hem.seconds;
  rep.timing.n_ps = hem.n_ps;

  ContinuationOptions copt;
  copt.eps_th = config.eps_th;
  copt.scan_step = config.scan_step;
  copt.s_cap = config.s_cap;

  const auto t0 = std::chrono::steady_clock::now();
  std::optional<CollapseResult> collapse;
  double s_m = 0.0;
  try {
    s_m = series_limit(hem, network, config.eps_th, copt);
    const VoltageContinuation cont(network, hem);
    const double coarse = std::max(s_m, coarse_collapse(cont, network, s_m, copt));
    collapse = refine_collapse(hem, cont, network, s_m, coarse);
  } catch (const NumericError& e) {
    if (e.stage() != "pade") throw;
    rep.pade_failed = true;
    rep.note = e.what();
  }
  rep.timing.t_pade = seconds_since(t0);

  rep.s_m = s_m;
  rep.sc = collapse ? collapse->sc : s_m;
  rep.sc_coarse = collapse ? collapse->sc_coarse : s_m;
  rep.vsm_percent = vsm_percent(rep.sc);
  rep.alert = rep.vsm_percent < config.alert_threshold_percent;

  // Voltages at sc: continued per bus where stage two succeeded, otherwise
  // the raw series (exact when sc == s_m).
  const auto raw = hem.voltages_at(rep.sc);
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < network.size(); ++i) {
    const Bus& b = network.bus(i);
    if (b.kind != BusKind::PQ) continue;
    BusLimit lim;
    lim.bus_id = b.id;
    lim.p_load = b.p_load;
    lim.q_load = b.q_load;
    Complex v = raw[i];
    if (collapse) {
      for (const auto& bc : collapse->per_bus)
        if (bc.bus_id == b.id) {
          lim.sc = bc.sc;
          lim.pade_l = bc.L;
          lim.pade_m = bc.M;
          v = bc.approximant.eval(rep.sc);
        }
    }
    lim.v_mag_at_sc = std::abs(v);
    const Complex drawn = rep.sc * load_at(b, lim.v_mag_at_sc);
    lim.p_limit = drawn.real();
    lim.q_limit = drawn.imag();
    if (lim.v_mag_at_sc < lowest) {
      lowest = lim.v_mag_at_sc;
      rep.critical_bus = b.id;
    }
    rep.buses.push_back(lim);
  }

  if (detail) {
    detail->network = network;
    detail->hem = std::move(hem);
    detail->collapse = std::move(collapse);
  }
  return rep;
}

VsaReport run_cycle(const Network& area, const ExternalEquivalent& eq, const Snapshot& fc,
                    const RunConfig& config, CycleDetail* detail) {
  const Network net = attach_equivalent(area, eq).with_loads(fc.loads);
  VsaReport rep = assess_network(net, config, fc.time, detail);
  rep.equivalent = eq;
  return rep;
}

// Snapshot files ---------------------------------------------------------------

std::vector<Snapshot> parse_snapshots(const std::string& text, const std::string& source) {
  const auto rows = parse_numeric_csv(text, source, {"t_seconds", "bus_id", "p_pu", "q_pu"});
  std::vector<Snapshot> out;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    const std::string where = source + ": row " + std::to_string(k + 1);
    if (r[1] != std::floor(r[1])) throw ParseError(where, "bus_id must be an integer");
    if (out.empty() || out.back().time != r[0]) {
      if (!out.empty() && r[0] < out.back().time) throw ParseError(where, "snapshot times must increase");
      out.push_back({r[0], {}});
    }
    if (!out.back().loads.emplace(static_cast<int>(r[1]), Complex(r[2], r[3])).second)
      throw ParseError(where, "duplicate bus " + std::to_string(static_cast<int>(r[1])) + " in snapshot");
  }
  return out;
}

std::vector<Snapshot> read_snapshots(const std::string& path) {
  return parse_snapshots(read_text_file(path), path);
}

std::string write_snapshots(const std::vector<Snapshot>& snapshots) {
  std::ostringstream out;
  out << std::setprecision(17) << "t_seconds,bus_id,p_pu,q_pu\n";
  for (const auto& s : snapshots)
    for (const auto& [id, load] : s.loads) out << s.time << ',' << id << ',' << load.real() << ',' << load.imag() << '\n';
  return out.str();
}

std::vector<VsaReport> replay(const Network& area, const std::vector<BoundaryMeasurement>& measurements,
                              const std::vector<Snapshot>& snapshots, const RunConfig& config) {
  std::vector<VsaReport> reports;
  if (snapshots.empty()) return reports;

  std::set<int> pq;
  for (const auto& b : area.buses())
    if (b.kind == BusKind::PQ) pq.insert(b.id);
  for (std::size_t j = 0; j < snapshots.size(); ++j) {
    const std::string where = "snapshot t=" + std::to_string(snapshots[j].time);
    std::set<int> ids;
    for (const auto& [id, _] : snapshots[j].loads) ids.insert(id);
    if (ids != pq) throw ParseError(where, "bus set does not match the load area's PQ buses");
    if (j > 0) {
      const double dt = snapshots[j].time - snapshots[j - 1].time;
      if (std::abs(dt - config.cadence_seconds) > 1e-6 * config.cadence_seconds)
        throw ParseError(where, "cadence " + std::to_string(dt) + " s differs from configured " +
                                    std::to_string(config.cadence_seconds) + " s");
    }
  }

  const IdentifyWeights weights{config.w_e, config.w_z, config.w_x};
  std::optional<ExternalEquivalent> prev;
  for (std::size_t j = 0; j < snapshots.size(); ++j) {
    const auto rows = window_rows(measurements, snapshots[j].time, config.window_k);
    std::optional<MeasurementWindow> window;
    try {
      window.emplace(rows);
    } catch (const std::invalid_argument& e) {
      throw ParseError("snapshot t=" + std::to_string(snapshots[j].time), e.what());
    }
    const IdentifyResult id = identify(*window, prev, weights);
    prev = id.equivalent;

    Snapshot target = snapshots[j];
    bool clamped = false;
    if (j > 0) {
      const Forecast f = forecast(snapshots[j], snapshots[j - 1]);
      target = f.snapshot;
      clamped = f.clamped;
    }
    VsaReport rep = run_cycle(area, id.equivalent, target, config);
    rep.time = snapshots[j].time;
    rep.forecast_clamped = clamped;
    rep.equivalent_degraded = id.degraded;
    reports.push_back(std::move(rep));
  }
  return reports;
}

}  // namespace hemvsa
