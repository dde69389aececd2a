#pragma once

#include <string>
#include <vector>

#include "hemvsa/hem.hpp"
#include "hemvsa/netmodel.hpp"
#include "hemvsa/pade.hpp"
#include "hemvsa/vsa.hpp"

namespace hemvsa {

/// One JSON object per line, every VsaReport field included.
std::string report_json(const VsaReport& report);

struct PvSample {
  double s = 0.0;
  std::string source;      // "series" up to s_m, "pade" beyond
  std::vector<double> v;   // |V| per bus in bus_ids order
};

struct PvCurve {
  double s_m = 0.0;
  double sc_coarse = 0.0;
  double sc = 0.0;
  std::vector<int> bus_ids;
  std::vector<PvSample> samples;
};

/// Raw series from 0 to s_m, then per-bus Padé continuation up to sc; sc
/// itself is always the last sample. Without a collapse result only the
/// series part is produced. `bus_id` < 0 selects every non-slack bus.
PvCurve sample_pv_curve(const Network& network, const HemSolution& hem, const CollapseResult* collapse,
                        double s_m, double step = 0.01, int bus_id = -1);

/// CSV with "# s_m", "# sc_coarse", "# sc" comment lines, then the header
/// s,source,v_<id>... .
std::string write_pv_curve(const PvCurve& curve);

/// Checker for write_pv_curve output: markers present, header consistent,
/// s non-decreasing, magnitudes finite and positive. Throws ParseError.
PvCurve parse_pv_curve(const std::string& text, const std::string& source);

}  // namespace hemvsa
