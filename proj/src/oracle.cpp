#include "hemvsa/oracle.hpp"

#include <chrono>
#include <cmath>

#include <Eigen/Dense>

namespace hemvsa::oracle {

namespace {

// Polar state with an index map from buses to unknowns.
struct Layout {
  std::vector<Eigen::Index> angle;      // -1 at slack
  std::vector<Eigen::Index> magnitude;  // -1 unless PQ
  std::vector<Eigen::Index> p_row;      // -1 at slack
  std::vector<Eigen::Index> q_row;      // -1 unless PQ
  Eigen::Index size = 0;

  explicit Layout(const Network& net) {
    const std::size_t n = net.size();
    angle.assign(n, -1);
    magnitude.assign(n, -1);
    p_row.assign(n, -1);
    q_row.assign(n, -1);
    for (std::size_t i = 0; i < n; ++i)
      if (net.bus(i).kind != BusKind::Slack) angle[i] = p_row[i] = size++;
    for (std::size_t i = 0; i < n; ++i)
      if (net.bus(i).kind == BusKind::PQ) magnitude[i] = q_row[i] = size++;
  }
};

class PowerBalance {
 public:
  PowerBalance(const Network& net, double s) : net_(net), s_(s), area_(net.area_active_load()) {}

  // Specified injection at bus i for magnitude vm.
  Complex spec(std::size_t i, double vm) const {
    const Bus& b = net_.bus(i);
    if (b.kind == BusKind::PV) return {b.p_gen - b.p_load + s_ * b.alpha * area_, 0.0};
    return -s_ * load_at(b, vm);
  }

  // d spec / d|V| at PQ buses.
  Complex dspec_dvm(std::size_t i, double vm) const {
    const Bus& b = net_.bus(i);
    const ZipShares z = b.zip.value_or(ZipShares::constant_power());
    return -s_ * Complex(b.p_load * (2.0 * z.p_z * vm + z.p_i), b.q_load * (2.0 * z.q_z * vm + z.q_i));
  }

  // d spec / d s (state fixed).
  Complex dspec_ds(std::size_t i, double vm) const {
    const Bus& b = net_.bus(i);
    if (b.kind == BusKind::PV) return {b.alpha * area_, 0.0};
    return -load_at(b, vm);
  }

  Eigen::VectorXd residual(const Layout& lay, const Eigen::VectorXcd& v) const {
    const Eigen::VectorXcd current = net_.y() * v;
    Eigen::VectorXd f(lay.size);
    for (std::size_t i = 0; i < net_.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      if (lay.p_row[i] < 0) continue;
      const Complex mis = v(ii) * std::conj(current(ii)) - spec(i, std::abs(v(ii)));
      f(lay.p_row[i]) = mis.real();
      if (lay.q_row[i] >= 0) f(lay.q_row[i]) = mis.imag();
    }
    return f;
  }

  Eigen::MatrixXd jacobian(const Layout& lay, const Eigen::VectorXcd& v) const {
    const auto& y = net_.y();
    const Eigen::Index n = v.size();
    const Eigen::VectorXcd current = y * v;
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(lay.size, lay.size);
    const Complex j(0.0, 1.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      if (lay.p_row[ui] < 0) continue;
      for (Eigen::Index k = 0; k < n; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        if (lay.angle[uk] < 0 && lay.magnitude[uk] < 0) continue;
        // dS_i/dtheta_k = j V_i conj(delta_ik I_i - Y_ik V_k)
        Complex ds_da = -j * v(i) * std::conj(y(i, k) * v(k));
        // dS_i/d|V_k| = V_i conj(Y_ik V_k/|V_k|) + delta_ik conj(I_i) V_i/|V_i|
        const Complex vnorm_k = v(k) / std::abs(v(k));
        Complex ds_dm = v(i) * std::conj(y(i, k) * vnorm_k);
        if (i == k) {
          ds_da += j * v(i) * std::conj(current(i));
          ds_dm += std::conj(current(i)) * vnorm_k - dspec_dvm(ui, std::abs(v(i)));
        }
        if (lay.angle[uk] >= 0) {
          jac(lay.p_row[ui], lay.angle[uk]) = ds_da.real();
          if (lay.q_row[ui] >= 0) jac(lay.q_row[ui], lay.angle[uk]) = ds_da.imag();
        }
        if (lay.magnitude[uk] >= 0) {
          jac(lay.p_row[ui], lay.magnitude[uk]) = ds_dm.real();
          if (lay.q_row[ui] >= 0) jac(lay.q_row[ui], lay.magnitude[uk]) = ds_dm.imag();
        }
      }
    }
    return jac;
  }

  Eigen::VectorXd ds_column(const Layout& lay, const Eigen::VectorXcd& v) const {
    Eigen::VectorXd col(lay.size);
    for (std::size_t i = 0; i < net_.size(); ++i) {
      if (lay.p_row[i] < 0) continue;
      const Complex d = -dspec_ds(i, std::abs(v(static_cast<Eigen::Index>(i))));
      col(lay.p_row[i]) = d.real();
      if (lay.q_row[i] >= 0) col(lay.q_row[i]) = d.imag();
    }
    return col;
  }

 private:
  const Network& net_;
  double s_;
  double area_;
};

void apply_step(const Network& net, const Layout& lay, Eigen::VectorXcd& v, const Eigen::VectorXd& dx) {
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    double vm = std::abs(v(ii));
    double va = std::arg(v(ii));
    if (lay.angle[i] >= 0) va += dx(lay.angle[i]);
    if (lay.magnitude[i] >= 0) vm += dx(lay.magnitude[i]);
    v(ii) = std::polar(vm, va);
  }
}

Eigen::VectorXcd initial_guess(const Network& net, const std::vector<Complex>* start) {
  const auto n = static_cast<Eigen::Index>(net.size());
  Eigen::VectorXcd v(n);
  if (start) {
    for (Eigen::Index i = 0; i < n; ++i) v(i) = (*start)[static_cast<std::size_t>(i)];
    return v;
  }
  Complex ref{1.0, 0.0};
  for (const auto& b : net.buses())
    if (b.kind == BusKind::Slack) {
      ref = b.v_slack;
      break;
    }
  for (Eigen::Index i = 0; i < n; ++i) {
    const Bus& b = net.bus(static_cast<std::size_t>(i));
    if (b.kind == BusKind::Slack)
      v(i) = b.v_slack;
    else if (b.kind == BusKind::PV)
      v(i) = std::polar(b.v_sp, std::arg(ref));
    else
      v(i) = ref;
  }
  return v;
}

// Newton iterations in place; returns (converged, iterations, final mismatch).
struct NewtonResult {
  bool converged = false;
  std::size_t iterations = 0;
  double mismatch = 0.0;
};

NewtonResult iterate(const Network& net, const Layout& lay, const PowerBalance& pb, Eigen::VectorXcd& v,
                     double tol, std::size_t max_iter) {
  NewtonResult r;
  Eigen::VectorXd f = pb.residual(lay, v);
  r.mismatch = lay.size ? f.cwiseAbs().maxCoeff() : 0.0;
  while (r.mismatch >= tol) {
    if (r.iterations >= max_iter || !std::isfinite(r.mismatch)) return r;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(pb.jacobian(lay, v));
    if (!lu.isInvertible()) return r;
    const Eigen::VectorXd dx = lu.solve(-f);
    apply_step(net, lay, v, dx);
    ++r.iterations;
    f = pb.residual(lay, v);
    r.mismatch = f.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (!(std::abs(v(i)) > 1e-3)) return r;  // collapsed onto a non-physical solution
  }
  r.converged = true;
  return r;
}

PfSolution package(const Network& net, const Eigen::VectorXcd& v, const NewtonResult& r) {
  PfSolution out;
  out.voltages.assign(v.data(), v.data() + v.size());
  out.q_pv.assign(net.size(), 0.0);
  const Eigen::VectorXcd current = net.y() * v;
  for (std::size_t i = 0; i < net.size(); ++i) {
    if (net.bus(i).kind != BusKind::PV) continue;
    const auto ii = static_cast<Eigen::Index>(i);
    out.q_pv[i] = (v(ii) * std::conj(current(ii))).imag();
  }
  out.iterations = r.iterations;
  out.converged = r.converged;
  out.power_mismatch = r.mismatch;
  return out;
}

}  // namespace

PfSolution newton_pf(const Network& network, double s, const NewtonOptions& options,
                     const std::vector<Complex>* start) {
  const Layout lay(network);
  const PowerBalance pb(network, s);
  Eigen::VectorXcd v = initial_guess(network, start);
  const auto r = iterate(network, lay, pb, v, options.tol, options.max_iter);
  return package(network, v, r);
}

CpfTrace cpf_nose(const Network& network, double s_start, const CpfOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  CpfTrace trace;
  const Layout lay(network);

  Eigen::VectorXcd v = initial_guess(network, nullptr);
  {
    const PowerBalance pb(network, s_start);
    const auto r = iterate(network, lay, pb, v, options.newton.tol, options.newton.max_iter);
    trace.newton_iterations += r.iterations;
    if (!r.converged) {
      trace.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return trace;
    }
  }
  trace.started = true;
  double s = s_start;
  trace.points.push_back({s, {v.data(), v.data() + v.size()}});

  double step = options.initial_step;
  while (step >= options.min_step) {
    if (s >= options.s_cap) {
      trace.reached_cap = true;
      break;
    }
    const double target = std::min(s + step, options.s_cap);
    // Tangent predictor: J dx/ds = -dF/ds.
    const PowerBalance here(network, s);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(here.jacobian(lay, v));
    Eigen::VectorXcd guess = v;
    if (lu.isInvertible()) {
      const Eigen::VectorXd tangent = lu.solve(-here.ds_column(lay, v));
      apply_step(network, lay, guess, tangent * (target - s));
    }
    const PowerBalance there(network, target);
    const auto r = iterate(network, lay, there, guess, options.newton.tol, options.corrector_iter);
    trace.newton_iterations += r.iterations;
    if (r.converged) {
      v = guess;
      s = target;
      ++trace.steps;
      trace.points.push_back({s, {v.data(), v.data() + v.size()}});
    } else {
      ++trace.rejected;
      step *= 0.5;
    }
  }
  trace.nose_scale = s;
  trace.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return trace;
}

}  // namespace hemvsa::oracle
