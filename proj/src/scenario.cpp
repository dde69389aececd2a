#include "hemvsa/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

#include "hemvsa/error.hpp"
#include "hemvsa/oracle.hpp"

namespace hemvsa {

AreaSplit split_at_slack(const Network& network) {
  if (network.n_slack() != 1) throw std::invalid_argument("split_at_slack: need exactly one slack bus");
  const Bus* slack = nullptr;
  for (const auto& b : network.buses())
    if (b.kind == BusKind::Slack) slack = &b;
  if (std::abs(slack->v_slack.imag()) > 1e-12)
    throw std::invalid_argument("split_at_slack: slack angle must be zero");

  std::vector<Bus> buses;
  for (const auto& b : network.buses())
    if (b.id != slack->id) buses.push_back(b);
  auto find = [&](int id) -> Bus& {
    return *std::find_if(buses.begin(), buses.end(), [&](const Bus& b) { return b.id == id; });
  };

  ExternalEquivalent eq;
  eq.e = slack->v_slack.real();
  std::vector<Branch> branches;
  for (const auto& br : network.branches()) {
    if (br.from != slack->id && br.to != slack->id) {
      branches.push_back(br);
      continue;
    }
    const int other = br.from == slack->id ? br.to : br.from;
    if (std::any_of(eq.z.begin(), eq.z.end(), [&](const auto& z) { return z.bus_id == other; }))
      throw std::invalid_argument("split_at_slack: parallel tie lines to bus " + std::to_string(other));
    eq.z.push_back({other, br.r, br.x});
    find(other).b_sh += 0.5 * br.b_sh;
  }
  if (eq.z.empty()) throw std::invalid_argument("split_at_slack: slack has no tie lines");
  Network area(network.name() + "_area", network.base_mva(), std::move(buses), std::move(branches), false);
  return {std::move(area), std::move(eq)};
}

Network two_bus_case(double r, double x, double p, double q, double v_source) {
  Bus src;
  src.id = 1;
  src.kind = BusKind::Slack;
  src.v_slack = {v_source, 0.0};
  Bus load;
  load.id = 2;
  load.kind = BusKind::PQ;
  load.p_load = p;
  load.q_load = q;
  return Network("two_bus", 100.0, {src, load}, {{1, 2, r, x, 0.0}});
}

double two_bus_nose_scale(double x, double p, double q, double v_source) {
  const double e2 = v_source * v_source;
  if (p == 0.0) return e2 / (4.0 * x * q);
  return e2 * (std::hypot(p, q) - q) / (2.0 * x * p * p);
}

namespace {

std::map<int, Complex> interpolate(const std::map<int, Complex>& a, const std::map<int, Complex>& b, double f) {
  std::map<int, Complex> out;
  for (const auto& [id, s] : a) out[id] = s + f * (b.at(id) - s);
  return out;
}

bool reachable(const Network& truth, const std::map<int, Complex>& loads) {
  oracle::CpfOptions opt;
  opt.s_cap = 1.0;
  const auto trace = oracle::cpf_nose(truth.with_loads(loads), 0.0, opt);
  return trace.started && trace.reached_cap;
}

}  // namespace

Scenario make_ramp_scenario(const Network& network, const RampOptions& options) {
  AreaSplit split = split_at_slack(network);
  Scenario sc{split.area, split.equivalent, {}, {}, std::nullopt};
  const Network truth = attach_equivalent(sc.area, sc.truth);

  std::map<int, Complex> base;
  for (const auto& b : sc.area.buses())
    if (b.kind == BusKind::PQ) base[b.id] = {b.p_load, b.q_load};

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> rate(0.0, options.random_max_rate);

  std::vector<std::map<int, Complex>> levels{base};
  for (std::size_t j = 1; j <= options.max_snapshots; ++j) {
    auto next = levels.back();
    for (auto& [id, s] : next) {
      const double r = options.random_max_rate > 0.0 ? rate(rng) : options.uniform_rate;
      s += r * base.at(id);
    }
    const double t = static_cast<double>(j) * options.cadence_seconds;
    if (!reachable(truth, next)) {
      sc.infeasible_time = t;
      break;
    }
    levels.push_back(next);
    sc.snapshots.push_back({t, next});
  }

  const std::size_t boundary_slack = truth.index_of(truth.buses().back().id);
  const Complex e = truth.bus(boundary_slack).v_slack;
  std::vector<Complex> warm;
  const double t_end = sc.snapshots.empty() ? 0.0 : sc.snapshots.back().time;
  const auto n_steps = static_cast<std::size_t>(std::floor(t_end / options.measurement_step + 1e-9));
  for (std::size_t k = 0; k <= n_steps; ++k) {
    const double t = static_cast<double>(k) * options.measurement_step;
    const double pos = t / options.cadence_seconds;
    const auto j = std::min(static_cast<std::size_t>(std::floor(pos)), levels.size() - 1);
    const auto loads =
        j + 1 < levels.size() ? interpolate(levels[j], levels[j + 1], pos - static_cast<double>(j)) : levels[j];
    const Network net = truth.with_loads(loads);
    const auto pf = oracle::newton_pf(net, 1.0, {}, warm.empty() ? nullptr : &warm);
    if (!pf.converged)
      throw NumericError("scenario", "oracle failed at t = " + std::to_string(t) + " s");
    warm = pf.voltages;
    for (const auto& z : sc.truth.z) {
      const Complex v = pf.voltages[net.index_of(z.bus_id)];
      const Complex s_in = v * std::conj((e - v) / Complex(z.r, z.x));
      sc.measurements.push_back({t, z.bus_id, std::abs(v), std::arg(v) * 180.0 / std::numbers::pi, s_in.real(), s_in.imag()});
    }
  }
  return sc;
}

Network synthetic_grid(std::size_t n_buses, std::uint64_t seed) {
  if (n_buses < 4) throw std::invalid_argument("synthetic_grid: need at least 4 buses");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_buses))));
  const std::size_t slack_index = n_buses / 2;
  std::vector<Bus> buses(n_buses);
  for (std::size_t i = 0; i < n_buses; ++i) {
    Bus& b = buses[i];
    b.id = static_cast<int>(i + 1);
    if (i == slack_index) {
      b.kind = BusKind::Slack;
      b.v_slack = {1.04, 0.0};
    } else if (i % 10 == 5) {
      b.kind = BusKind::PV;
      b.v_sp = 1.01 + 0.02 * unit(rng);
      b.p_gen = 1.5 + 1.5 * unit(rng);
      b.alpha = 0.05;
    } else {
      b.kind = BusKind::PQ;
      b.p_load = 0.25 + 0.5 * unit(rng);
      b.q_load = b.p_load * (0.2 + 0.3 * unit(rng));
    }
  }
  std::vector<Branch> branches;
  std::set<std::pair<int, int>> used;
  auto add = [&](std::size_t a, std::size_t b) {
    const int f = static_cast<int>(std::min(a, b) + 1), t = static_cast<int>(std::max(a, b) + 1);
    if (a == b || !used.insert({f, t}).second) return;
    const double x = 0.02 + 0.04 * unit(rng);
    branches.push_back({f, t, 0.2 * x, x, 0.02 * unit(rng)});
  };
  for (std::size_t i = 0; i < n_buses; ++i) {
    if ((i + 1) % cols != 0 && i + 1 < n_buses) add(i, i + 1);
    if (i + cols < n_buses) add(i, i + cols);
  }
  std::uniform_int_distribution<std::size_t> pick(0, n_buses - 1);
  for (std::size_t c = 0; c < n_buses / 10; ++c) {
    const std::size_t a = pick(rng);
    const std::size_t b = std::min(n_buses - 1, a + 1 + pick(rng) % (2 * cols));
    add(a, b);
  }
  return Network("synthetic" + std::to_string(n_buses), 100.0, std::move(buses), std::move(branches));
}

}  // namespace hemvsa
