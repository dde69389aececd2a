#include "hemvsa/extequiv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "hemvsa/error.hpp"
#include "hemvsa/textio.hpp"

namespace hemvsa {

MeasurementWindow::MeasurementWindow(const std::vector<BoundaryMeasurement>& rows) {
  std::map<double, std::map<int, BoundaryMeasurement>> by_time;
  for (const auto& r : rows) {
    if (!(r.v_mag > 0.0))
      throw std::invalid_argument("measurement window: non-positive |V| at bus " + std::to_string(r.bus_id));
    if (!by_time[r.t].emplace(r.bus_id, r).second)
      throw std::invalid_argument("measurement window: duplicate row for bus " + std::to_string(r.bus_id));
  }
  if (by_time.size() < 2) throw std::invalid_argument("measurement window: need at least 2 instants");
  for (const auto& [id, _] : by_time.begin()->second) buses_.push_back(id);
  for (const auto& [t, per_bus] : by_time) {
    if (per_bus.size() != buses_.size() ||
        !std::equal(per_bus.begin(), per_bus.end(), buses_.begin(),
                    [](const auto& kv, int id) { return kv.first == id; }))
      throw std::invalid_argument("measurement window: boundary bus set differs between instants");
    times_.push_back(t);
    for (const auto& [_, r] : per_bus) rows_.push_back(r);
  }
}

MeasurementWindow MeasurementWindow::rotated(const std::vector<double>& shift_deg) const {
  if (shift_deg.size() != times_.size()) throw std::invalid_argument("rotated: one shift per instant");
  MeasurementWindow out = *this;
  for (std::size_t k = 0; k < times_.size(); ++k)
    for (std::size_t i = 0; i < buses_.size(); ++i) out.rows_[k * buses_.size() + i].v_ang_deg += shift_deg[k];
  return out;
}

double residual(double e, double r, double x, const BoundaryMeasurement& m) {
  const Complex a = Complex(m.p, -m.q) * Complex(r, x) + m.v_mag * m.v_mag;
  return e - std::abs(a) / m.v_mag;
}

namespace {

constexpr double kMinReference = 1e-6;

// Parameter vector layout: [E, r_1, x_1, ..., r_N, x_N].
struct Problem {
  const MeasurementWindow& w;
  const std::optional<ExternalEquivalent>& prev;
  const IdentifyWeights& weights;
  std::vector<double> r_ref, x_ref;

  Problem(const MeasurementWindow& w_, const std::optional<ExternalEquivalent>& p, const IdentifyWeights& wt)
      : w(w_), prev(p), weights(wt) {
    if (!prev) return;
    for (int id : w.buses()) {
      auto it = std::find_if(prev->z.begin(), prev->z.end(), [&](const auto& b) { return b.bus_id == id; });
      if (it == prev->z.end())
        throw std::invalid_argument("identify: previous equivalent lacks boundary bus " + std::to_string(id));
      r_ref.push_back(std::max(it->r, kMinReference));
      x_ref.push_back(std::abs(it->x) > kMinReference ? it->x : kMinReference);
    }
  }

  std::size_t n() const { return w.buses().size(); }
  Eigen::Index params() const { return static_cast<Eigen::Index>(1 + 2 * n()); }
  Eigen::Index rows() const {
    return static_cast<Eigen::Index>(w.instants() * n() + (prev ? 2 * n() : 0));
  }

  void evaluate(const Eigen::VectorXd& p, Eigen::VectorXd& f, Eigen::MatrixXd* jac) const {
    const double se = std::sqrt(weights.w_e / static_cast<double>(n()));
    f.resize(rows());
    if (jac) jac->setZero(rows(), params());
    Eigen::Index row = 0;
    for (std::size_t k = 0; k < w.instants(); ++k) {
      for (std::size_t i = 0; i < n(); ++i, ++row) {
        const auto& m = w.at(k, i);
        const Eigen::Index ir = static_cast<Eigen::Index>(1 + 2 * i);
        const double r = p(ir), x = p(ir + 1);
        f(row) = se * residual(p(0), r, x, m);
        if (!jac) continue;
        const double a = m.p * r + m.q * x + m.v_mag * m.v_mag;
        const double b = m.p * x - m.q * r;
        const double mag = std::hypot(a, b);
        (*jac)(row, 0) = se;
        if (mag > 0.0) {
          (*jac)(row, ir) = -se * (a * m.p - b * m.q) / (mag * m.v_mag);
          (*jac)(row, ir + 1) = -se * (a * m.q + b * m.p) / (mag * m.v_mag);
        }
      }
    }
    if (!prev) return;
    const double sz = std::sqrt(weights.w_z), sx = std::sqrt(weights.w_x);
    for (std::size_t i = 0; i < n(); ++i) {
      const Eigen::Index ir = static_cast<Eigen::Index>(1 + 2 * i);
      f(row) = sz * (p(ir) / r_ref[i] - 1.0);
      if (jac) (*jac)(row, ir) = sz / r_ref[i];
      ++row;
      f(row) = sx * (p(ir + 1) / x_ref[i] - 1.0);
      if (jac) (*jac)(row, ir + 1) = sx / x_ref[i];
      ++row;
    }
  }

  double objective(const Eigen::VectorXd& p) const {
    Eigen::VectorXd f;
    evaluate(p, f, nullptr);
    return f.squaredNorm();
  }

  // Lower bounds: E >= 1, r >= 0, x free.
  double lower(Eigen::Index j) const {
    if (j == 0) return 1.0;
    return (j % 2 == 1) ? 0.0 : -std::numeric_limits<double>::infinity();
  }

  void project(Eigen::VectorXd& p) const {
    for (Eigen::Index j = 0; j < p.size(); ++j) p(j) = std::max(p(j), lower(j));
  }

  double kkt(const Eigen::VectorXd& p, const Eigen::VectorXd& grad) const {
    Eigen::VectorXd q = p - grad;
    project(q);
    return (p - q).cwiseAbs().maxCoeff();
  }
};

Eigen::VectorXd pack(const ExternalEquivalent& eq, const std::vector<int>& buses) {
  Eigen::VectorXd p(static_cast<Eigen::Index>(1 + 2 * buses.size()));
  p(0) = eq.e;
  for (std::size_t i = 0; i < buses.size(); ++i) {
    auto it = std::find_if(eq.z.begin(), eq.z.end(), [&](const auto& b) { return b.bus_id == buses[i]; });
    if (it == eq.z.end())
      throw std::invalid_argument("identify: initial equivalent lacks boundary bus " + std::to_string(buses[i]));
    p(static_cast<Eigen::Index>(1 + 2 * i)) = it->r;
    p(static_cast<Eigen::Index>(2 + 2 * i)) = it->x;
  }
  return p;
}

ExternalEquivalent unpack(const Eigen::VectorXd& p, const std::vector<int>& buses) {
  ExternalEquivalent eq;
  eq.e = p(0);
  for (std::size_t i = 0; i < buses.size(); ++i)
    eq.z.push_back({buses[i], p(static_cast<Eigen::Index>(1 + 2 * i)), p(static_cast<Eigen::Index>(2 + 2 * i))});
  return eq;
}

}  // namespace

double identification_objective(const MeasurementWindow& window, const ExternalEquivalent& eq,
                                const std::optional<ExternalEquivalent>& prev,
                                const IdentifyWeights& weights) {
  const Problem prob(window, prev, weights);
  return prob.objective(pack(eq, window.buses()));
}

IdentifyResult identify(const MeasurementWindow& window, const std::optional<ExternalEquivalent>& prev,
                        const IdentifyWeights& weights, const IdentifyOptions& options) {
  const Problem prob(window, prev, weights);
  const auto& buses = window.buses();

  Eigen::VectorXd p;
  if (options.initial) {
    p = pack(*options.initial, buses);
  } else if (prev) {
    p = pack(*prev, buses);
  } else {
    ExternalEquivalent guess{1.05, {}};
    for (int id : buses) guess.z.push_back({id, 0.02, 0.1});
    p = pack(guess, buses);
  }
  prob.project(p);

  IdentifyResult out;
  Eigen::VectorXd f;
  Eigen::MatrixXd jac;
  prob.evaluate(p, f, &jac);
  double cost = f.squaredNorm();
  out.objective_history.push_back(cost);
  Eigen::VectorXd grad = 2.0 * jac.transpose() * f;
  double lambda = 1e-3;

  std::size_t it = 0;
  for (; it < options.max_iter; ++it) {
    out.kkt_residual = prob.kkt(p, grad);
    if (out.kkt_residual < options.kkt_tol) break;

    // Variables pinned at a bound with the gradient pushing outward stay fixed.
    std::vector<Eigen::Index> free;
    for (Eigen::Index j = 0; j < p.size(); ++j)
      if (!(p(j) <= prob.lower(j) && grad(j) > 0.0)) free.push_back(j);
    const auto nf = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd jf(jac.rows(), nf);
    for (Eigen::Index c = 0; c < nf; ++c) jf.col(c) = jac.col(free[static_cast<std::size_t>(c)]);
    const Eigen::MatrixXd jtj = jf.transpose() * jf;

    bool accepted = false;
    double nu = 2.0;
    while (lambda < 1e16) {
      // Damped step as the least-squares solution of [J; sqrt(lambda D)] step = [-f; 0].
      Eigen::MatrixXd a(jf.rows() + nf, nf);
      a.topRows(jf.rows()) = jf;
      a.bottomRows(nf).setZero();
      for (Eigen::Index c = 0; c < nf; ++c) a(jf.rows() + c, c) = std::sqrt(lambda * std::max(jtj(c, c), 1e-12));
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(a.rows());
      rhs.head(f.size()) = -f;
      const auto qr = a.colPivHouseholderQr();
      Eigen::VectorXd step = qr.solve(rhs);

      // Geodesic acceleration from a finite-difference second directional derivative.
      {
        constexpr double h = 0.1;
        Eigen::VectorXd probe = p;
        for (Eigen::Index c = 0; c < nf; ++c) probe(free[static_cast<std::size_t>(c)]) += h * step(c);
        Eigen::VectorXd fp;
        prob.evaluate(probe, fp, nullptr);
        const Eigen::VectorXd curv = (2.0 / h) * ((fp - f) / h - jf * step);
        Eigen::VectorXd rhs2 = Eigen::VectorXd::Zero(a.rows());
        rhs2.head(f.size()) = -curv;
        const Eigen::VectorXd accel = qr.solve(rhs2);
        if (accel.allFinite() && 2.0 * accel.norm() <= 0.75 * step.norm()) step += 0.5 * accel;
      }

      Eigen::VectorXd trial = p;
      for (Eigen::Index c = 0; c < nf; ++c) trial(free[static_cast<std::size_t>(c)]) += step(c);
      prob.project(trial);
      Eigen::VectorXd ft;
      prob.evaluate(trial, ft, nullptr);
      const double trial_cost = ft.squaredNorm();
      if (std::isfinite(trial_cost) && trial_cost < cost) {
        // Gain ratio against the linear model.
        Eigen::VectorXd taken(nf);
        for (Eigen::Index c = 0; c < nf; ++c)
          taken(c) = trial(free[static_cast<std::size_t>(c)]) - p(free[static_cast<std::size_t>(c)]);
        const double predicted = cost - (f + jf * taken).squaredNorm();
        const double rho = predicted > 0.0 ? (cost - trial_cost) / predicted : 0.0;
        lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
        lambda = std::max(lambda, 1e-15);
        p = trial;
        cost = trial_cost;
        accepted = true;
        break;
      }
      lambda *= nu;
      nu *= 2.0;
    }
    if (!accepted) break;  // no descent available at machine precision
    prob.evaluate(p, f, &jac);
    grad = 2.0 * jac.transpose() * f;
    out.objective_history.push_back(cost);
  }
  out.kkt_residual = prob.kkt(p, grad);
  out.iterations = it;
  out.objective = cost;
  out.degraded = !(out.kkt_residual < options.kkt_tol) && cost > 1e-28;
  out.equivalent = unpack(p, buses);
  return out;
}

Network attach_equivalent(const Network& load_area, const ExternalEquivalent& eq) {
  std::vector<std::string> problems;
  for (const auto& b : eq.z)
    if (!load_area.contains(b.bus_id))
      problems.push_back("equivalent branch to unknown boundary bus " + std::to_string(b.bus_id));
  if (eq.z.empty()) problems.push_back("equivalent has no boundary branches");
  if (!problems.empty()) throw ValidationError(problems);

  std::vector<Bus> buses = load_area.buses();
  int slack_id = 0;
  for (const auto& b : buses) slack_id = std::max(slack_id, b.id);
  ++slack_id;
  Bus slack;
  slack.id = slack_id;
  slack.kind = BusKind::Slack;
  slack.v_slack = Complex(eq.e, 0.0);
  buses.push_back(slack);

  std::vector<Branch> branches = load_area.branches();
  for (const auto& b : eq.z) branches.push_back({slack_id, b.bus_id, b.r, b.x, 0.0});
  return Network(load_area.name(), load_area.base_mva(), std::move(buses), std::move(branches));
}

// CSV -------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto a = cell.find_first_not_of(" \t\r");
    const auto b = cell.find_last_not_of(" \t\r");
    out.push_back(a == std::string::npos ? std::string() : cell.substr(a, b - a + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_number(const std::string& cell, const std::string& where, const std::string& column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size() || !std::isfinite(v)) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw ParseError(where, "column " + column + ": not a finite number: '" + cell + "'");
  }
}

}  // namespace

std::vector<std::vector<double>> parse_numeric_csv(const std::string& text, const std::string& source,
                                                   const std::vector<std::string>& columns) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  std::vector<std::size_t> order;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#')
      continue;
    const auto cells = split_csv(line);
    const std::string where = source + ":" + std::to_string(lineno);
    if (!header_seen) {
      for (const auto& c : columns) {
        auto it = std::find(cells.begin(), cells.end(), c);
        if (it == cells.end()) throw ParseError(where, "header lacks column '" + c + "'");
        order.push_back(static_cast<std::size_t>(it - cells.begin()));
      }
      width = cells.size();
      header_seen = true;
      continue;
    }
    if (cells.size() != width)
      throw ParseError(where, "expected " + std::to_string(width) + " columns, got " +
                                  std::to_string(cells.size()));
    std::vector<double> row;
    for (std::size_t c = 0; c < columns.size(); ++c) row.push_back(to_number(cells[order[c]], where, columns[c]));
    rows.push_back(std::move(row));
  }
  if (!header_seen) throw ParseError(source, "missing header line");
  return rows;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<BoundaryMeasurement> parse_measurements(const std::string& text, const std::string& source) {
  const auto rows =
      parse_numeric_csv(text, source, {"t_seconds", "bus_id", "v_mag_pu", "v_ang_deg", "p_pu", "q_pu"});
  std::vector<BoundaryMeasurement> out;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    if (r[1] != std::floor(r[1]))
      throw ParseError(source + ": row " + std::to_string(k + 1), "bus_id must be an integer");
    if (!(r[2] > 0.0)) throw ParseError(source + ": row " + std::to_string(k + 1), "v_mag_pu must be positive");
    out.push_back({r[0], static_cast<int>(r[1]), r[2], r[3], r[4], r[5]});
  }
  return out;
}

std::vector<BoundaryMeasurement> read_measurements(const std::string& path) {
  return parse_measurements(read_text_file(path), path);
}

std::string write_measurements(const std::vector<BoundaryMeasurement>& rows) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "t_seconds,bus_id,v_mag_pu,v_ang_deg,p_pu,q_pu\n";
  for (const auto& r : rows)
    out << r.t << ',' << r.bus_id << ',' << r.v_mag << ',' << r.v_ang_deg << ',' << r.p << ',' << r.q << '\n';
  return out.str();
}

std::vector<BoundaryMeasurement> window_rows(const std::vector<BoundaryMeasurement>& rows, double t_end,
                                             std::size_t k) {
  std::set<double> times;
  for (const auto& r : rows)
    if (r.t <= t_end) times.insert(r.t);
  while (times.size() > k) times.erase(times.begin());
  std::vector<BoundaryMeasurement> out;
  for (const auto& r : rows)
    if (times.count(r.t)) out.push_back(r);
  return out;
}

}  // namespace hemvsa
