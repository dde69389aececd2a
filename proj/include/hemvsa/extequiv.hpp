#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hemvsa/netmodel.hpp"

namespace hemvsa {

/// One row of the boundary measurement file. p/q are the flows from the
/// external grid into the boundary bus.
struct BoundaryMeasurement {
  double t = 0.0;
  int bus_id = 0;
  double v_mag = 0.0;
  double v_ang_deg = 0.0;
  double p = 0.0;
  double q = 0.0;
};

/// K instants x N boundary buses, each instant carrying every bus once.
class MeasurementWindow {
 public:
  /// Throws std::invalid_argument when K < 2, a magnitude is not positive,
  /// or the bus set differs between instants.
  explicit MeasurementWindow(const std::vector<BoundaryMeasurement>& rows);

  std::size_t instants() const { return times_.size(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<int>& buses() const { return buses_; }
  /// Row for instant k and boundary bus index i (position in buses()).
  const BoundaryMeasurement& at(std::size_t k, std::size_t i) const {
    return rows_[k * buses_.size() + i];
  }

  /// Copy with every voltage angle at instant k shifted by shift_deg[k].
  MeasurementWindow rotated(const std::vector<double>& shift_deg) const;

 private:
  MeasurementWindow() = default;
  std::vector<double> times_;
  std::vector<int> buses_;
  std::vector<BoundaryMeasurement> rows_;
};

struct EquivalentBranch {
  int bus_id = 0;
  double r = 0.0;
  double x = 0.0;
};

/// Source E (real, angle reference) behind one branch per boundary bus.
struct ExternalEquivalent {
  double e = 1.0;
  std::vector<EquivalentBranch> z;
};

struct IdentifyWeights {
  double w_e = 1.0;
  double w_z = 0.1;
  double w_x = 0.1;
};

struct IdentifyResult {
  ExternalEquivalent equivalent;
  double objective = 0.0;
  double kkt_residual = 0.0;     // inf-norm of the projected gradient
  std::size_t iterations = 0;
  bool degraded = false;         // iteration cap hit before KKT tolerance
  std::vector<double> objective_history;  // accepted iterates, starting point first
};

/// E - |(P - jQ)(r + jx) + |V|^2| / |V|, zero for data generated by the
/// equivalent itself.
double residual(double e, double r, double x, const BoundaryMeasurement& m);

/// Objective: (w_e/N) sum_k sum_i residual^2 plus, when `prev` is given,
/// w_z (r/r_prev - 1)^2 + w_x (x/x_prev - 1)^2 per branch.
double identification_objective(const MeasurementWindow& window, const ExternalEquivalent& eq,
                                const std::optional<ExternalEquivalent>& prev,
                                const IdentifyWeights& weights);

struct IdentifyOptions {
  std::size_t max_iter = 200;
  double kkt_tol = 1e-8;
  std::optional<ExternalEquivalent> initial;  // defaults to prev, then a neutral guess
};

/// Bound-constrained least squares (E >= 1, r >= 0). Regularization is
/// active only when prev is given.
IdentifyResult identify(const MeasurementWindow& window, const std::optional<ExternalEquivalent>& prev,
                        const IdentifyWeights& weights = {}, const IdentifyOptions& options = {});

/// Load area plus a slack bus at E∠0 and one branch per boundary bus. The new
/// slack takes id max(id) + 1. Throws ValidationError on unknown boundary ids.
Network attach_equivalent(const Network& load_area, const ExternalEquivalent& eq);

/// Measurement CSV: header t_seconds,bus_id,v_mag_pu,v_ang_deg,p_pu,q_pu.
std::vector<BoundaryMeasurement> read_measurements(const std::string& path);
std::vector<BoundaryMeasurement> parse_measurements(const std::string& text, const std::string& source);
std::string write_measurements(const std::vector<BoundaryMeasurement>& rows);

/// Rows of the last `k` distinct instants at or before t_end.
std::vector<BoundaryMeasurement> window_rows(const std::vector<BoundaryMeasurement>& rows,
                                             double t_end, std::size_t k);

}  // namespace hemvsa
