#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hemvsa/hem.hpp"
#include "hemvsa/netmodel.hpp"
#include "hemvsa/series.hpp"

namespace hemvsa {

/// Rational approximant num(s)/den(s) with den[0] = 1.
struct PadeApproximant {
  std::vector<Complex> num;  // a_0..a_L
  std::vector<Complex> den;  // b_0..b_M
  std::size_t L = 0;
  std::size_t M = 0;
  double scale = 1.0;        // variable scaling used during construction

  Complex eval(Complex s) const;
  Complex eval(double s) const { return eval(Complex(s, 0.0)); }
  std::vector<Complex> poles() const;
  std::vector<Complex> zeros() const;
};

/// [L/M] approximant matching `series` through order L+M. Requires
/// L+M+1 <= series.size() and |L-M| <= 1. The coefficient system is solved
/// in s / rho, rho being the convergence radius estimated from the series
/// tail. Returns nullopt when the Padé block is degenerate or the solution
/// fails to reproduce the series within kPadeMatchTolerance.
std::optional<PadeApproximant> try_pade(const PowerSeries& series, std::size_t L, std::size_t M);

/// As try_pade but throws NumericError("pade") on degeneracy and
/// std::invalid_argument on bad orders.
PadeApproximant pade_approximant(const PowerSeries& series, std::size_t L, std::size_t M);

/// Root-test estimate of the convergence radius from the second half of the
/// series; 1 when the tail is zero or too short.
double radius_estimate(const PowerSeries& series);

/// Near-diagonal orders (L, M) with L + M + 1 == terms and M >= L.
std::pair<std::size_t, std::size_t> near_diagonal_orders(std::size_t terms);

/// Roots of sum_k coeffs[k] s^k, sorted by real part. Aberth-Ehrlich
/// iteration, with companion-matrix eigenvalues when it does not settle.
/// Trailing coefficients negligible relative to the largest are dropped first.
std::vector<Complex> polynomial_roots(std::span<const Complex> coeffs);

inline constexpr double kFroissartDistance = 1e-6;
/// Smallest-to-largest LU pivot ratio below which the scaled Padé block
/// counts as singular.
inline constexpr double kPadeRankTolerance = 1e-15;
/// Largest coefficient mismatch, relative to max(1, |c_k|), an accepted
/// approximant may show when re-expanded through order L+M.
inline constexpr double kPadeMatchTolerance = 1e-10;
/// Admissible poles must lie this close to the real axis, relative to their
/// real part. Padé poles on the fold's branch cut sit ~1e-4..1e-2 off axis in
/// double precision.
inline constexpr double kRealPoleRatio = 1e-2;

struct PoleSelection {
  std::optional<double> pole;   // real part of the selected pole
  std::size_t discarded = 0;    // admissible poles removed as pole-zero doublets
};

/// Poles of `p` with no zero within kFroissartDistance.
std::vector<Complex> genuine_poles(const PadeApproximant& p);

/// Smallest admissible real pole strictly above `lower_bound`: nearly real
/// (|Im| < kRealPoleRatio |Re|) and not cancelled by a zero within
/// kFroissartDistance.
PoleSelection nearest_real_pole(const PadeApproximant& p, double lower_bound);

/// Collapse estimate of one bus voltage series from its first `terms`
/// coefficients: the fold of the P-V curve is a square-root branch point of
/// V(s), which is a simple pole of V''/V'. The nearest admissible pole of the
/// near-diagonal approximant of V''/V' is returned; when that series is too
/// short or degenerate, the nearest admissible pole of V's own approximant is
/// used instead.
PoleSelection collapse_pole(const PowerSeries& v, std::size_t terms, double lower_bound);

// Two-stage continuation ------------------------------------------------------

/// Full-order approximants of every bus voltage (constant at slack buses).
class VoltageContinuation {
 public:
  VoltageContinuation(const Network& network, const HemSolution& hem);
  std::vector<Complex> voltages_at(double s) const;
  const std::optional<PadeApproximant>& at(std::size_t bus) const { return approx_[bus]; }
  /// Coefficients used by the approximant at `bus` (0 when none exists).
  std::size_t terms_used(std::size_t bus) const { return used_[bus]; }

 private:
  const Network* network_;
  const HemSolution* hem_;
  std::vector<std::optional<PadeApproximant>> approx_;
  std::vector<std::size_t> used_;
};

struct BusCollapse {
  int bus_id = 0;
  std::size_t L = 0, M = 0;
  double residual = 0.0;  // bus residual at sc' with the chosen order
  double sc = 0.0;
  PadeApproximant approximant;
};

struct CollapseResult {
  double s_m = 0.0;
  double sc_coarse = 0.0;
  std::vector<BusCollapse> per_bus;
  std::vector<int> excluded_buses;
  double sc = 0.0;
  std::size_t poles_discarded = 0;

  /// Per-bus continued voltage at s (chosen order); PQ buses only.
  std::optional<Complex> voltage_at(int bus_id, double s) const;
};

struct ContinuationOptions {
  double eps_th = 1e-5;
  double scan_step = 0.01;
  double s_cap = 20.0;
};

/// Largest s reached by an upward scan from 0 in steps of scan_step for which
/// the raw series mismatch stays below tol. Returns s_cap when never
/// exceeded, 0 when the first step already fails.
double series_limit(const HemSolution& hem, const Network& network, double tol,
                    const ContinuationOptions& options = {});

/// Largest s above s_m for which the continued PQ mismatch stays below
/// eps_th. Throws NumericError("pade") if no crossing exists below s_cap.
double coarse_collapse(const VoltageContinuation& cont, const Network& network, double s_m,
                       const ContinuationOptions& options = {});

/// Number of series lengths below the largest regular one tried per bus
/// during order selection.
inline constexpr std::size_t kRefineWindow = 4;

/// Per-PQ-bus order selection at sc' (the near-diagonal order with the
/// smallest bus residual among the kRefineWindow + 1 longest regular ones)
/// and collapse estimates; sc is their minimum. Throws NumericError("pade") when no bus yields an admissible pole.
CollapseResult refine_collapse(const HemSolution& hem, const VoltageContinuation& cont,
                               const Network& network, double s_m, double sc_coarse);

/// Both stages end to end.
CollapseResult find_collapse(const HemSolution& hem, const Network& network,
                             const ContinuationOptions& options = {});

}  // namespace hemvsa
