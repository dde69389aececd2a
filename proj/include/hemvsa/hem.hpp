#pragma once

#include <cstddef>
#include <vector>

#include "hemvsa/germ.hpp"
#include "hemvsa/netmodel.hpp"
#include "hemvsa/series.hpp"

namespace hemvsa {

/// Voltage series in the loading scale s, anchored at the physical germ:
/// s = 0 is the germ operating point and s = 1 the present loading.
struct HemSolution {
  std::vector<PowerSeries> v;  // per bus
  std::vector<PowerSeries> w;  // per bus, 1 / V
  std::vector<RealSeries> q;   // total reactive injection Q(s); PV buses only
  std::vector<RealSeries> m;   // |V(s)|; ZIP PQ buses only
  std::size_t n_ps = 0;        // orders needed to meet tol at s = 1
  bool converged = false;      // mismatch at s = 1 reached tol within max_terms
  double mismatch_at_one = 0.0;
  std::size_t system_dimension = 0;
  double seconds = 0.0;

  /// Number of coefficients held per series (may exceed n_ps + 1 when extra
  /// terms were requested for continuation).
  std::size_t terms() const { return v.empty() ? 0 : v.front().size(); }

  std::vector<Complex> voltages_at(double s) const;
  std::vector<Complex> voltages_at(double s, std::size_t terms) const;
  std::vector<double> q_at(double s) const;
};

struct HemOptions {
  double tol_pfe = 1e-6;
  std::size_t max_terms = 60;
  /// Keep computing until at least this many orders exist even after the
  /// stopping rule is met; continuation benefits from the extra terms.
  std::size_t min_terms = 0;
};

/// Order-n right-hand side (load side) of a PQ bus under the ZIP model:
///   S_Z* v[n-1] + S_P* conj(w[n-1]) + S_I* sum_{k=0}^{n-1} m[k] conj(w[n-1-k]).
/// Requires n >= 1 and orders 0..n-1 present.
Complex zip_rhs_coeff(const Bus& bus, std::size_t n, const PowerSeries& v, const PowerSeries& w,
                      const RealSeries& m);

/// Throws NumericError("hem") on a singular recursion matrix. Failure to
/// converge at s = 1 is reported through `converged`, not thrown.
HemSolution hem_expand(const Network& network, const GermSolution& germ,
                       const HemOptions& options = {});

}  // namespace hemvsa
