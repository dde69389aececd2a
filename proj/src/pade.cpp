#include "hemvsa/pade.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "hemvsa/error.hpp"

namespace hemvsa {

namespace {

Complex horner(const std::vector<Complex>& c, Complex s) {
  Complex acc{};
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * s + *it;
  return acc;
}

}  // namespace

Complex PadeApproximant::eval(Complex s) const { return horner(num, s) / horner(den, s); }

namespace {

std::vector<Complex> scaled_roots(const std::vector<Complex>& c, double scale) {
  std::vector<Complex> t(c.size());
  double f = 1.0;
  for (std::size_t k = 0; k < c.size(); ++k, f *= scale) t[k] = c[k] * f;
  auto roots = polynomial_roots(t);
  for (auto& r : roots) r *= scale;
  return roots;
}

}  // namespace

std::vector<Complex> PadeApproximant::poles() const { return scaled_roots(den, scale); }
std::vector<Complex> PadeApproximant::zeros() const { return scaled_roots(num, scale); }

double radius_estimate(const PowerSeries& series) {
  const std::size_t n = series.size();
  if (n < 3) return 1.0;
  const std::size_t lo = std::max<std::size_t>(1, n / 2), hi = n - 1;
  if (hi <= lo) return 1.0;
  const double a = std::abs(series[lo]), b = std::abs(series[hi]);
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) return 1.0;
  const double rho = std::pow(a / b, 1.0 / static_cast<double>(hi - lo));
  return std::isfinite(rho) ? std::clamp(rho, 1e-3, 1e3) : 1.0;
}

std::pair<std::size_t, std::size_t> near_diagonal_orders(std::size_t terms) {
  if (terms == 0) throw std::invalid_argument("near_diagonal_orders: need at least one term");
  const std::size_t total = terms - 1;
  const std::size_t m = (total + 1) / 2;
  return {total - m, m};
}

std::optional<PadeApproximant> try_pade(const PowerSeries& series, std::size_t L, std::size_t M) {
  if (L + M + 1 > series.size())
    throw std::invalid_argument("pade: series too short for requested orders");
  if ((L > M ? L - M : M - L) > 1) throw std::invalid_argument("pade: orders must satisfy |L-M| <= 1");

  // Work in t = s / rho so the coefficients are of comparable size.
  const double rho = radius_estimate(series);
  std::vector<Complex> cs(L + M + 1);
  double f = 1.0;
  for (std::size_t k = 0; k < cs.size(); ++k, f *= rho) cs[k] = series[k] * f;
  auto c = [&](long k) { return k < 0 ? Complex{} : cs[static_cast<std::size_t>(k)]; };

  PadeApproximant p;
  p.L = L;
  p.M = M;
  p.scale = rho;
  std::vector<Complex> den(M + 1, Complex{});
  den[0] = 1.0;
  if (M > 0) {
    const auto m = static_cast<Eigen::Index>(M);
    Eigen::MatrixXcd a(m, m);
    Eigen::VectorXcd rhs(m);
    // sum_{j=0}^{M} b_j c_{k-j} = 0 for k = L+1 .. L+M
    for (Eigen::Index r = 0; r < m; ++r) {
      const long k = static_cast<long>(L) + 1 + r;
      for (Eigen::Index j = 0; j < m; ++j) a(r, j) = c(k - (j + 1));
      rhs(r) = -c(k);
    }
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double d = std::norm(lu.matrixLU()(j, j));
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    if (!(lo > kPadeRankTolerance * kPadeRankTolerance * hi)) return std::nullopt;
    const Eigen::VectorXcd b = lu.solve(rhs);
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!std::isfinite(std::abs(b(j)))) return std::nullopt;
      den[static_cast<std::size_t>(j) + 1] = b(j);
    }
  }
  std::vector<Complex> num(L + 1, Complex{});
  for (std::size_t k = 0; k <= L; ++k)
    for (std::size_t j = 0; j <= std::min(k, M); ++j) num[k] += den[j] * cs[k - j];

  p.num.resize(L + 1);
  p.den.resize(M + 1);
  f = 1.0;
  for (std::size_t k = 0; k <= std::max(L, M); ++k, f /= rho) {
    if (k <= L) p.num[k] = num[k] * f;
    if (k <= M) p.den[k] = den[k] * f;
  }

  // Reject solutions that no longer reproduce the series through L+M.
  std::vector<Complex> r(L + M + 1);
  for (std::size_t k = 0; k < r.size(); ++k) {
    Complex acc = k <= L ? p.num[k] : Complex{};
    for (std::size_t j = 1; j <= std::min(k, M); ++j) acc -= p.den[j] * r[k - j];
    r[k] = acc;
    if (!(std::abs(acc - series[k]) <= kPadeMatchTolerance * std::max(1.0, std::abs(series[k]))))
      return std::nullopt;
  }
  return p;
}

PadeApproximant pade_approximant(const PowerSeries& series, std::size_t L, std::size_t M) {
  auto p = try_pade(series, L, M);
  if (!p)
    throw NumericError("pade", "degenerate Pade block for [" + std::to_string(L) + "/" +
                                   std::to_string(M) + "]");
  return *p;
}

namespace {

std::vector<Complex> companion_roots(std::span<const Complex> c) {
  const auto d = static_cast<Eigen::Index>(c.size() - 1);
  Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(d, d);
  for (Eigen::Index i = 1; i < d; ++i) companion(i, i - 1) = 1.0;
  for (Eigen::Index i = 0; i < d; ++i) companion(i, d - 1) = -c[static_cast<std::size_t>(i)] / c.back();
  const Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(companion, /*computeEigenvectors=*/false);
  return {es.eigenvalues().data(), es.eigenvalues().data() + d};
}

// Aberth-Ehrlich simultaneous iteration; nullopt when it fails to settle.
std::optional<std::vector<Complex>> aberth_roots(std::span<const Complex> c) {
  const std::size_t n = c.size() - 1;
  const double radius = std::pow(std::abs(c.front()) / std::abs(c.back()), 1.0 / static_cast<double>(n));
  if (!(radius > 0.0) || !std::isfinite(radius)) return std::nullopt;
  std::vector<Complex> z(n);
  for (std::size_t k = 0; k < n; ++k)
    z[k] = std::polar(radius, (2.0 * std::numbers::pi * static_cast<double>(k) + 0.4) / static_cast<double>(n));
  std::vector<bool> done(n, false);
  for (int it = 0; it < 200; ++it) {
    bool all = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i]) continue;
      Complex f = c.back(), df{};
      for (std::size_t k = n; k-- > 0;) {
        df = df * z[i] + f;
        f = f * z[i] + c[k];
      }
      if (f == Complex{}) {
        done[i] = true;
        continue;
      }
      const Complex ratio = f / df;
      Complex repel{};
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) repel += 1.0 / (z[i] - z[j]);
      const Complex step = ratio / (1.0 - ratio * repel);
      if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) return std::nullopt;
      z[i] -= step;
      if (std::abs(step) <= 1e-12 * std::abs(z[i])) done[i] = true;
      else all = false;
    }
    if (all) return z;
  }
  return std::nullopt;
}

}  // namespace

std::vector<Complex> polynomial_roots(std::span<const Complex> coeffs) {
  double scale = 0.0;
  for (const auto& c : coeffs) scale = std::max(scale, std::abs(c));
  if (scale == 0.0) return {};
  std::size_t degree = coeffs.size();
  while (degree > 0 && std::abs(coeffs[degree - 1]) <= 1e-14 * scale) --degree;
  if (degree <= 1) return {};
  // Roots at the origin would stall the iteration; strip them first.
  std::size_t zeros = 0;
  while (coeffs[zeros] == Complex{}) ++zeros;
  const auto c = coeffs.subspan(zeros, degree - zeros);
  std::vector<Complex> roots(zeros, Complex{});
  if (c.size() > 1) {
    auto found = aberth_roots(c);
    const auto r = found ? std::move(*found) : companion_roots(c);
    roots.insert(roots.end(), r.begin(), r.end());
  }
  std::sort(roots.begin(), roots.end(), [](Complex a, Complex b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return roots;
}

std::vector<Complex> genuine_poles(const PadeApproximant& p) {
  const auto zeros = p.zeros();
  std::vector<Complex> out;
  for (const auto& pole : p.poles())
    if (std::none_of(zeros.begin(), zeros.end(), [&](Complex z) { return std::abs(z - pole) < kFroissartDistance; }))
      out.push_back(pole);
  return out;
}

namespace {

// Distance from `x` to the zero of `c` that Newton's method reaches from x;
// infinity when it does not settle. A zero within kFroissartDistance of a
// simple pole is always the one reached.
double newton_zero_distance(const std::vector<Complex>& c, Complex x) {
  Complex z = x;
  for (int it = 0; it < 30; ++it) {
    Complex f{}, df{};
    for (auto k = c.rbegin(); k != c.rend(); ++k) {
      df = df * z + f;
      f = f * z + *k;
    }
    if (f == Complex{}) return std::abs(z - x);
    if (df == Complex{}) break;
    const Complex step = f / df;
    z -= step;
    if (std::abs(step) <= 1e-14 * std::max(1.0, std::abs(z))) return std::abs(z - x);
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace

PoleSelection nearest_real_pole(const PadeApproximant& p, double lower_bound) {
  PoleSelection out;
  for (const auto& pole : p.poles()) {
    if (!(pole.real() > lower_bound)) continue;
    if (std::abs(pole.imag()) >= kRealPoleRatio * std::abs(pole.real())) continue;
    if (newton_zero_distance(p.num, pole) < kFroissartDistance) {
      ++out.discarded;
      continue;
    }
    if (!out.pole || pole.real() < *out.pole) out.pole = pole.real();
  }
  return out;
}

namespace {

// Largest near-diagonal approximant using at most `terms` coefficients. The
// block becomes numerically singular past some order and stays so, which
// makes bisection on the order safe; a final downward walk covers the rare
// non-monotone case.
std::optional<PadeApproximant> best_near_diagonal(const PowerSeries& s, std::size_t terms,
                                                  std::size_t* used = nullptr) {
  auto attempt = [&](std::size_t k) {
    const auto [L, M] = near_diagonal_orders(k);
    return try_pade(s, L, M);
  };
  std::size_t hi = std::min(terms, s.size());
  if (hi < 2) return std::nullopt;
  auto best = attempt(hi);
  std::size_t best_k = hi;
  if (!best) {
    std::size_t lo = 1;  // largest known-good order (1 means none yet)
    while (hi - lo > 1) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (auto p = attempt(mid)) {
        best = std::move(p);
        best_k = mid;
        lo = mid;
      } else {
        hi = mid;
      }
    }
    for (std::size_t k = lo; !best && k >= 2; --k)
      if ((best = attempt(k))) best_k = k;
  }
  if (best && used) *used = best_k;
  return best;
}

PowerSeries truncate(const PowerSeries& v, std::size_t terms) {
  std::vector<Complex> c(v.coeffs().begin(), v.coeffs().begin() + std::min(terms, v.size()));
  return PowerSeries(std::move(c));
}

}  // namespace

PoleSelection collapse_pole(const PowerSeries& v, std::size_t terms, double lower_bound) {
  const PowerSeries head = truncate(v, terms);
  PoleSelection total;
  if (head.size() >= 4) {
    const PowerSeries d1 = derivative(head);
    if (std::abs(d1[0]) > 0.0) {
      const PowerSeries d2 = derivative(d1);
      const PowerSeries g = divide(d2, d1, d2.size());
      if (auto p = best_near_diagonal(g, g.size())) {
        auto sel = nearest_real_pole(*p, lower_bound);
        if (sel.pole) return sel;
        total.discarded += sel.discarded;
      }
    }
  }
  if (auto p = best_near_diagonal(head, head.size())) {
    auto sel = nearest_real_pole(*p, lower_bound);
    sel.discarded += total.discarded;
    return sel;
  }
  return total;
}

// ---------------------------------------------------------------------------

VoltageContinuation::VoltageContinuation(const Network& network, const HemSolution& hem)
    : network_(&network), hem_(&hem), approx_(network.size()), used_(network.size(), 0) {
  for (std::size_t i = 0; i < network.size(); ++i) {
    if (network.bus(i).kind == BusKind::Slack) continue;
    approx_[i] = best_near_diagonal(hem.v[i], hem.v[i].size(), &used_[i]);
  }
}

std::vector<Complex> VoltageContinuation::voltages_at(double s) const {
  std::vector<Complex> out(network_->size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (approx_[i])
      out[i] = approx_[i]->eval(s);
    else
      out[i] = hem_->v[i].eval(s);
  }
  return out;
}

std::optional<Complex> CollapseResult::voltage_at(int bus_id, double s) const {
  for (const auto& b : per_bus)
    if (b.bus_id == bus_id) return b.approximant.eval(s);
  return std::nullopt;
}

double series_limit(const HemSolution& hem, const Network& network, double tol,
                    const ContinuationOptions& options) {
  double last_ok = 0.0;
  const auto steps = static_cast<std::size_t>(std::floor(options.s_cap / options.scan_step + 1e-9));
  for (std::size_t k = 1; k <= steps; ++k) {
    const double s = static_cast<double>(k) * options.scan_step;
    const auto v = hem.voltages_at(s);
    const auto q = hem.q_at(s);
    if (!(pf_mismatch(network, v, s, q) < tol)) return last_ok;
    last_ok = s;
  }
  return options.s_cap;
}

double coarse_collapse(const VoltageContinuation& cont, const Network& network, double s_m,
                       const ContinuationOptions& options) {
  auto ok = [&](double s) {
    return pq_mismatch(network, cont.voltages_at(s), s) < options.eps_th;
  };
  double lo = s_m;
  double step = options.scan_step;
  double hi = lo + step;
  while (ok(hi)) {
    lo = hi;
    step *= 2.0;
    hi = lo + step;
    if (hi >= options.s_cap) {
      if (ok(options.s_cap)) throw NumericError("pade", "no collapse detected in range");
      hi = options.s_cap;
      break;
    }
  }
  for (int it = 0; it < 60 && hi - lo > 1e-10 * std::max(1.0, lo); ++it) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

CollapseResult refine_collapse(const HemSolution& hem, const VoltageContinuation& cont,
                               const Network& network, double s_m, double sc_coarse) {
  CollapseResult out;
  out.s_m = s_m;
  out.sc_coarse = sc_coarse;
  const auto base = cont.voltages_at(sc_coarse);
  const std::vector<double> no_q(network.size(), 0.0);

  for (std::size_t i = 0; i < network.size(); ++i) {
    const Bus& bus = network.bus(i);
    if (bus.kind != BusKind::PQ) continue;
    const auto& series = hem.v[i];

    const std::size_t top = cont.terms_used(i);
    if (top == 0) {
      out.excluded_buses.push_back(bus.id);
      continue;
    }
    std::optional<BusCollapse> best;
    for (std::size_t terms = top > kRefineWindow + 1 ? top - kRefineWindow : 2; terms <= top; ++terms) {
      const std::size_t total = terms - 1;
      std::vector<std::pair<std::size_t, std::size_t>> orders;
      if (total % 2 == 0) {
        orders.emplace_back(total / 2, total / 2);
      } else {
        orders.emplace_back(total / 2 + 1, total / 2);
        orders.emplace_back(total / 2, total / 2 + 1);
      }
      for (const auto& [L, M] : orders) {
        auto p = try_pade(series, L, M);
        if (!p) continue;
        auto v = base;
        v[i] = p->eval(sc_coarse);
        const double r = std::abs(bus_residual(network, v, sc_coarse, no_q, i));
        if (!std::isfinite(r)) continue;
        if (!best || r < best->residual) best = BusCollapse{bus.id, L, M, r, 0.0, *p};
      }
    }
    if (!best) {
      out.excluded_buses.push_back(bus.id);
      continue;
    }
    const auto sel = collapse_pole(series, best->L + best->M + 1, s_m);
    out.poles_discarded += sel.discarded;
    if (!sel.pole) {
      out.excluded_buses.push_back(bus.id);
      continue;
    }
    best->sc = *sel.pole;
    out.per_bus.push_back(std::move(*best));
  }
  if (out.per_bus.empty()) throw NumericError("pade", "no admissible collapse pole at any PQ bus");
  out.sc = std::numeric_limits<double>::infinity();
  for (const auto& b : out.per_bus) out.sc = std::min(out.sc, b.sc);
  return out;
}

CollapseResult find_collapse(const HemSolution& hem, const Network& network,
                             const ContinuationOptions& options) {
  const double s_m = series_limit(hem, network, options.eps_th, options);
  const VoltageContinuation cont(network, hem);
  const double sc_coarse = std::max(s_m, coarse_collapse(cont, network, s_m, options));
  return refine_collapse(hem, cont, network, s_m, sc_coarse);
}

}  // namespace hemvsa
