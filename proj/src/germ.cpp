#include "hemvsa/germ.hpp"

#include <chrono>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hemvsa/embedding_system.hpp"
#include "hemvsa/error.hpp"

namespace hemvsa {

namespace {

double pv_active(const Bus& b) { return b.p_gen - b.p_load; }

void evaluate_at_one(const Network& network, GermSolution& g) {
  const std::size_t n = network.size();
  g.germ_voltage.assign(n, {});
  g.germ_q.assign(n, 0.0);
  g.magnitude_error = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    g.germ_voltage[i] = g.v_g[i].eval(1.0);
    if (network.bus(i).kind == BusKind::PV) {
      g.germ_q[i] = g.q_g[i].eval(1.0);
      g.magnitude_error = std::max(g.magnitude_error,
                                   std::abs(std::abs(g.germ_voltage[i]) - network.bus(i).v_sp));
    }
  }
  g.mismatch = germ_mismatch(network, g, 1.0);
}

}  // namespace

std::vector<Complex> starting_voltage(const Network& network) {
  const auto n = static_cast<Eigen::Index>(network.size());
  Eigen::MatrixXcd a = network.y();
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Bus& b = network.bus(static_cast<std::size_t>(i));
    if (b.kind != BusKind::Slack) continue;
    a.row(i).setZero();
    a(i, i) = 1.0;
    rhs(i) = b.v_slack;
  }
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
  if (!(lu.rcond() > 1e-14)) throw NumericError("germ", "starting-voltage system is singular");
  const Eigen::VectorXcd x = lu.solve(rhs);
  return {x.data(), x.data() + n};
}

double germ_mismatch(const Network& network, const GermSolution& germ, double s) {
  const auto& y = network.y();
  const std::size_t n = network.size();
  std::vector<Complex> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = germ.v_g[i].eval(s);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Bus& b = network.bus(i);
    if (b.kind == BusKind::Slack) continue;
    Complex current{};
    for (std::size_t k = 0; k < n; ++k)
      current += y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * v[k];
    if (b.kind == BusKind::PV) {
      const Complex inj(s * pv_active(b), germ.q_g[i].eval(s));
      current -= std::conj(inj) / std::conj(v[i]);
    }
    const double r = std::abs(current);
    if (std::isnan(r)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, r);
  }
  return worst;
}

GermSolution physical_germ(const Network& network, const GermOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = network.size();
  if (network.n_slack() == 0) throw NumericError("germ", "network has no slack bus");

  GermSolution g;
  g.v_start = starting_voltage(network);
  g.v_g.resize(n);
  g.w_g.resize(n);
  g.q_g.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (g.v_start[i] == Complex{})
      throw NumericError("germ", "zero starting voltage at bus " + std::to_string(network.bus(i).id));
    g.v_g[i].push_back(g.v_start[i]);
    g.w_g[i].push_back(1.0 / g.v_start[i]);
    if (network.bus(i).kind == BusKind::PV) g.q_g[i].push_back(0.0);
  }

  auto finish = [&] {
    evaluate_at_one(network, g);
    g.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return g;
  };

  if (network.n_pv() == 0) return finish();

  evaluate_at_one(network, g);
  if (g.magnitude_error < options.tol && g.mismatch < options.tol) return finish();

  const std::vector<Complex> no_constant(n);
  std::vector<Complex> w0(n);
  for (std::size_t i = 0; i < n; ++i) w0[i] = g.w_g[i][0];
  const EmbeddingSystem sys(network, g.v_start, w0, no_constant, "germ");
  g.system_dimension = sys.dimension();

  for (std::size_t order = 1; order <= options.max_terms; ++order) {
    EmbeddingSystem::Rhs rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Bus& b = network.bus(i);
      if (b.kind != BusKind::PV) continue;
      const auto& v = g.v_g[i];
      const auto& w = g.w_g[i];
      const auto& q = g.q_g[i];
      Complex q_conv{};
      for (std::size_t m = 1; m < order; ++m) q_conv += q[m] * std::conj(w[order - m]);
      rhs.power[i] = pv_active(b) * std::conj(w[order - 1]) - Complex(0.0, 1.0) * q_conv;
      rhs.recip[i] = -convolve_at(w, v, order, 1, order - 1);
      const double delta =
          order == 1 ? 0.5 * (b.v_sp * b.v_sp - std::norm(g.v_start[i])) : 0.0;
      rhs.magnitude[i] = delta - 0.5 * convolve_conj_at(v, v, order, 1, order - 1).real();
    }
    const auto sol = sys.solve(rhs);
    for (std::size_t i = 0; i < n; ++i) {
      g.v_g[i].push_back(sol.v[i]);
      if (network.bus(i).kind == BusKind::PV) {
        g.w_g[i].push_back(sol.w[i]);
        g.q_g[i].push_back(sol.q[i]);
      } else {
        g.w_g[i].push_back(reciprocal_step(g.v_g[i], g.w_g[i], order));
      }
    }
    g.n_germ = order;
    evaluate_at_one(network, g);
    if (g.magnitude_error < options.tol && g.mismatch < options.tol) return finish();
  }

  std::ostringstream msg;
  msg << "germ did not converge in " << options.max_terms << " terms (magnitude error "
      << g.magnitude_error << ", mismatch " << g.mismatch << ")";
  throw NumericError("germ", msg.str());
}

}  // namespace hemvsa
