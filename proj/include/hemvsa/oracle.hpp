#pragma once

#include <cstddef>
#include <vector>

#include "hemvsa/netmodel.hpp"

namespace hemvsa::oracle {

struct PfSolution {
  std::vector<Complex> voltages;
  std::vector<double> q_pv;  // per bus; reactive injection at PV buses
  std::size_t iterations = 0;
  bool converged = false;
  double power_mismatch = 0.0;
};

struct NewtonOptions {
  double tol = 1e-12;          // max power mismatch, pu
  std::size_t max_iter = 30;
};

/// Polar Newton-Raphson on the power balance with PQ loads scaled by s and
/// PV generation P_g + s*alpha*P_area, the same parameterized problem the
/// embedding solves. `start` (optional) is the initial guess; otherwise a
/// flat start at the slack voltage with PV magnitudes at v_sp.
/// Divergence is reported through `converged`, never thrown.
PfSolution newton_pf(const Network& network, double s, const NewtonOptions& options = {},
                     const std::vector<Complex>* start = nullptr);

struct CpfPoint {
  double s = 0.0;
  std::vector<Complex> voltages;
};

struct CpfTrace {
  std::vector<CpfPoint> points;
  double nose_scale = 0.0;
  std::size_t steps = 0;            // accepted predictor-corrector steps
  std::size_t rejected = 0;         // halvings
  std::size_t newton_iterations = 0;
  bool reached_cap = false;
  bool started = false;             // newton_pf converged at s_start
  double seconds = 0.0;
};

struct CpfOptions {
  double initial_step = 0.01;
  double min_step = 1e-5;
  double s_cap = 20.0;
  std::size_t corrector_iter = 10;
  NewtonOptions newton{};
};

/// Natural-parameter continuation in s with tangent predictor and Newton
/// corrector; the step is halved on corrector failure and tracing stops once
/// it drops below min_step. nose_scale is the last converged s.
CpfTrace cpf_nose(const Network& network, double s_start, const CpfOptions& options = {});

}  // namespace hemvsa::oracle
