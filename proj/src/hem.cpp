#include "hemvsa/hem.hpp"

#include <chrono>
#include <cmath>

#include "hemvsa/embedding_system.hpp"
#include "hemvsa/error.hpp"

namespace hemvsa {

std::vector<Complex> HemSolution::voltages_at(double s) const { return voltages_at(s, terms()); }

std::vector<Complex> HemSolution::voltages_at(double s, std::size_t n_terms) const {
  std::vector<Complex> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].eval(s, n_terms);
  return out;
}

std::vector<double> HemSolution::q_at(double s) const {
  std::vector<double> out(q.size(), 0.0);
  for (std::size_t i = 0; i < q.size(); ++i)
    if (!q[i].empty()) out[i] = q[i].eval(s);
  return out;
}

Complex zip_rhs_coeff(const Bus& bus, std::size_t n, const PowerSeries& v, const PowerSeries& w,
                      const RealSeries& m) {
  const ZipShares z = bus.zip.value_or(ZipShares::constant_power());
  const Complex sz_conj(bus.p_load * z.p_z, -bus.q_load * z.q_z);
  const Complex si_conj(bus.p_load * z.p_i, -bus.q_load * z.q_i);
  const Complex sp_conj(bus.p_load * z.p_p, -bus.q_load * z.q_p);
  Complex out = sp_conj * std::conj(w[n - 1]);
  if (sz_conj != Complex{}) out += sz_conj * v[n - 1];
  if (si_conj != Complex{}) {
    Complex conv{};
    for (std::size_t k = 0; k < n; ++k) conv += m[k] * std::conj(w[n - 1 - k]);
    out += si_conj * conv;
  }
  return out;
}

HemSolution hem_expand(const Network& network, const GermSolution& germ,
                       const HemOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = network.size();
  const double area_load = network.area_active_load();

  HemSolution h;
  h.v.resize(n);
  h.w.resize(n);
  h.q.resize(n);
  h.m.resize(n);
  std::vector<Complex> v0(n), w0(n), pv_constant(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Bus& b = network.bus(i);
    v0[i] = b.kind == BusKind::Slack ? b.v_slack : germ.germ_voltage[i];
    w0[i] = 1.0 / v0[i];
    h.v[i].push_back(v0[i]);
    h.w[i].push_back(w0[i]);
    if (b.kind == BusKind::PV) {
      h.q[i].push_back(germ.germ_q[i]);
      pv_constant[i] = Complex(b.p_gen - b.p_load, -germ.germ_q[i]);
    }
    if (b.kind == BusKind::PQ && b.zip) h.m[i].push_back(std::abs(v0[i]));
  }

  const EmbeddingSystem sys(network, v0, w0, pv_constant, "hem");
  h.system_dimension = sys.dimension();

  auto check = [&] {
    const auto v1 = h.voltages_at(1.0);
    const auto q1 = h.q_at(1.0);
    h.mismatch_at_one = pf_mismatch(network, v1, 1.0, q1);
  };
  check();
  h.converged = h.mismatch_at_one < options.tol_pfe;

  const std::size_t last = std::max(options.max_terms, options.min_terms);
  for (std::size_t order = 1; order <= last; ++order) {
    if (h.converged && order > options.min_terms) break;
    EmbeddingSystem::Rhs rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Bus& b = network.bus(i);
      const auto& v = h.v[i];
      const auto& w = h.w[i];
      switch (b.kind) {
        case BusKind::Slack:
          break;
        case BusKind::PQ:
          rhs.power[i] = -zip_rhs_coeff(b, order, v, w, h.m[i]);
          break;
        case BusKind::PV: {
          const auto& q = h.q[i];
          Complex q_conv{};
          for (std::size_t mm = 1; mm < order; ++mm) q_conv += q[mm] * std::conj(w[order - mm]);
          rhs.power[i] = b.alpha * area_load * std::conj(w[order - 1]) - Complex(0.0, 1.0) * q_conv;
          rhs.recip[i] = -convolve_at(w, v, order, 1, order - 1);
          const double delta = order == 1 ? 0.5 * (b.v_sp * b.v_sp - std::norm(v0[i])) : 0.0;
          rhs.magnitude[i] = delta - 0.5 * convolve_conj_at(v, v, order, 1, order - 1).real();
          break;
        }
      }
    }
    const auto sol = sys.solve(rhs);
    for (std::size_t i = 0; i < n; ++i) {
      const Bus& b = network.bus(i);
      h.v[i].push_back(sol.v[i]);
      if (b.kind == BusKind::PV) {
        h.w[i].push_back(sol.w[i]);
        h.q[i].push_back(sol.q[i]);
      } else {
        h.w[i].push_back(reciprocal_step(h.v[i], h.w[i], order));
      }
      if (!h.m[i].empty()) h.m[i].push_back(magnitude_step(h.v[i], h.m[i], order));
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(std::abs(sol.v[i])))
        throw NumericError("hem", "non-finite coefficient at order " + std::to_string(order));
    }
    if (!h.converged) {
      check();
      h.n_ps = order;
      h.converged = h.mismatch_at_one < options.tol_pfe;
    }
  }
  if (h.converged) {
    // Mismatch reported for the stopping order, not for the padded series.
    const auto v1 = h.voltages_at(1.0, h.n_ps + 1);
    std::vector<double> q1(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      if (!h.q[i].empty()) q1[i] = h.q[i].eval(1.0, h.n_ps + 1);
    h.mismatch_at_one = pf_mismatch(network, v1, 1.0, q1);
  }
  h.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return h;
}

}  // namespace hemvsa
