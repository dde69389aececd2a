#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "hemvsa/extequiv.hpp"
#include "hemvsa/netmodel.hpp"
#include "hemvsa/vsa.hpp"

namespace hemvsa {

/// Load area and star equivalent obtained by cutting a case at its single
/// slack bus: the slack becomes the source E (|V_slack|), each tie line a
/// star branch, and the area-side half of each tie line's charging a bus
/// shunt. Requires a real slack voltage; the slack's own load is dropped.
struct AreaSplit {
  Network area;
  ExternalEquivalent equivalent;
};
AreaSplit split_at_slack(const Network& network);

/// Slack at v_source behind r + jx feeding one PQ load p + jq.
Network two_bus_case(double r, double x, double p, double q, double v_source = 1.0);

/// Closed-form maximum loading scale of two_bus_case with r = 0.
double two_bus_nose_scale(double x, double p, double q, double v_source = 1.0);

struct RampOptions {
  double uniform_rate = 0.02;   // fraction of base load added per interval
  double random_max_rate = 0.0; // > 0: per-bus rates drawn from [0, max] each interval
  double cadence_seconds = 30.0;
  double measurement_step = 3.0;
  std::size_t max_snapshots = 2000;
  std::uint64_t seed = 1;
};

struct Scenario {
  Network area;
  ExternalEquivalent truth;
  std::vector<BoundaryMeasurement> measurements;
  std::vector<Snapshot> snapshots;           // feasible snapshots only
  std::optional<double> infeasible_time;     // first snapshot the oracle cannot reach
};

/// Load ramp on the split case. Snapshot j sits at j * cadence (j >= 1);
/// loads interpolate linearly between snapshots, starting from the base case
/// at t = 0. Measurements are Newton solutions of the area with the true
/// equivalent at every measurement_step up to the last feasible snapshot,
/// which the continuation oracle decides.
Scenario make_ramp_scenario(const Network& network, const RampOptions& options);

/// Meshed test grid of n buses (lattice plus seeded random chords) with one
/// slack bus and roughly one PV bus in ten, loaded well inside its limit.
Network synthetic_grid(std::size_t n_buses, std::uint64_t seed);

}  // namespace hemvsa
