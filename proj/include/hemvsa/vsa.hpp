#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hemvsa/config.hpp"
#include "hemvsa/extequiv.hpp"
#include "hemvsa/hem.hpp"
#include "hemvsa/netmodel.hpp"
#include "hemvsa/pade.hpp"

namespace hemvsa {

/// State-estimator loads of the load area at one instant (pu, id -> P + jQ).
struct Snapshot {
  double time = 0.0;
  std::map<int, Complex> loads;
};

struct Forecast {
  Snapshot snapshot;
  bool clamped = false;  // some component changed sign and was set to zero
};

/// One-interval linear extrapolation 2 S_t - S_{t-1}, stamped at
/// t + (t - t_prev). Throws std::invalid_argument on mismatched bus sets or
/// non-increasing times.
Forecast forecast(const Snapshot& now, const Snapshot& prev);

inline double vsm_percent(double sc) { return (sc - 1.0) * 100.0; }

struct BusLimit {
  int bus_id = 0;
  double sc = 0.0;        // 0 when the bus was excluded from stage two
  double v_mag_at_sc = 0.0;
  double p_load = 0.0;    // forecast load at s = 1
  double q_load = 0.0;
  double p_limit = 0.0;   // load drawn at sc
  double q_limit = 0.0;
  std::size_t pade_l = 0, pade_m = 0;
};

struct CycleTiming {
  double t_germ = 0.0;
  double t_ps = 0.0;
  double t_pade = 0.0;
  std::size_t n_germ = 0;
  std::size_t n_ps = 0;

  double t_hem() const { return t_germ + t_ps + t_pade; }
  /// Mean time per computed order.
  double t_m() const {
    const auto n = n_germ + n_ps;
    return n ? (t_germ + t_ps) / static_cast<double>(n) : 0.0;
  }
};

struct VsaReport {
  double time = 0.0;
  double s_m = 0.0;
  double sc_coarse = 0.0;
  double sc = 0.0;
  double vsm_percent = 0.0;
  int critical_bus = 0;
  bool alert = false;
  std::vector<BusLimit> buses;   // PQ buses in network order
  CycleTiming timing;
  std::optional<ExternalEquivalent> equivalent;
  bool forecast_clamped = false;
  bool equivalent_degraded = false;
  bool pade_failed = false;      // sc fell back to s_m
  bool series_converged = true;
  std::string note;
};

/// Stages behind one report, kept for P-V curve output.
struct CycleDetail {
  std::optional<Network> network;
  HemSolution hem;
  std::optional<CollapseResult> collapse;
};

/// Germ, series, both continuation stages and the report on a complete
/// network (slack included). Germ/series failures propagate as NumericError.
VsaReport assess_network(const Network& network, const RunConfig& config, double time = 0.0,
                         CycleDetail* detail = nullptr);

/// Attaches `eq` to the load area, overwrites PQ loads with the forecast and
/// runs assess_network.
VsaReport run_cycle(const Network& area, const ExternalEquivalent& eq, const Snapshot& forecast,
                    const RunConfig& config, CycleDetail* detail = nullptr);

/// Snapshot CSV: header t_seconds,bus_id,p_pu,q_pu.
std::vector<Snapshot> parse_snapshots(const std::string& text, const std::string& source);
std::vector<Snapshot> read_snapshots(const std::string& path);
std::string write_snapshots(const std::vector<Snapshot>& snapshots);

/// Sliding-window identification and one cycle per snapshot. The first
/// cycle identifies without regularization; each later one uses the previous
/// estimate. The first snapshot is assessed as is, later ones on their
/// one-step forecast. Throws ParseError on schema violations (bus set,
/// cadence, missing measurements).
std::vector<VsaReport> replay(const Network& area, const std::vector<BoundaryMeasurement>& measurements,
                              const std::vector<Snapshot>& snapshots, const RunConfig& config);

}  // namespace hemvsa
