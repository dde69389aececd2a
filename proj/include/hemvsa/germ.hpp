#pragma once

#include <cstddef>
#include <vector>

#include "hemvsa/netmodel.hpp"
#include "hemvsa/series.hpp"

namespace hemvsa {

/// Physical germ: PQ buses unloaded, PV buses at their base active output
/// and reactive power adjusted until |V| reaches v_sp.
struct GermSolution {
  std::vector<Complex> v_start;    // V_ST per bus
  std::vector<PowerSeries> v_g;    // per bus
  std::vector<PowerSeries> w_g;    // per bus, 1 / V_g
  std::vector<RealSeries> q_g;     // per bus; non-empty only at PV buses
  std::size_t n_germ = 0;          // orders computed beyond the starting voltage
  std::size_t system_dimension = 0;  // 0 when no PV bus needed a recursion
  std::vector<Complex> germ_voltage;  // V_g(1)
  std::vector<double> germ_q;         // Q_g(1); zero at non-PV buses
  double magnitude_error = 0.0;       // max_PV | |V_g(1)| - v_sp |
  double mismatch = 0.0;              // germ PFE mismatch at s = 1
  double seconds = 0.0;
};

/// Voltages with every PV/PQ bus at zero injection and slack buses pinned.
/// Throws NumericError("germ") if the system is singular.
std::vector<Complex> starting_voltage(const Network& network);

struct GermOptions {
  double tol = 1e-8;
  std::size_t max_terms = 30;
};

/// Throws NumericError("germ") on a singular recursion matrix or when the
/// stopping rule is not met within max_terms (message carries the final
/// mismatch).
GermSolution physical_germ(const Network& network, const GermOptions& options = {});

/// Germ mismatch of the germ-embedded equations at loading s: PQ rows carry
/// no load, PV rows inject s*P_g - j Q_g(s).
double germ_mismatch(const Network& network, const GermSolution& germ, double s);

}  // namespace hemvsa
