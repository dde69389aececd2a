#include "hemvsa/series.hpp"

#include <algorithm>
#include <cmath>

namespace hemvsa {

using cd = std::complex<double>;

cd convolve_conj_at(const PowerSeries& a, const PowerSeries& b, std::size_t n, std::size_t lo,
                    std::size_t hi) {
  cd acc{};
  if (lo > hi) return acc;
  for (std::size_t m = lo; m <= hi && m <= n; ++m) {
    const std::size_t j = n - m;
    if (j < a.size() && m < b.size()) acc += a[j] * std::conj(b[m]);
  }
  return acc;
}

cd reciprocal_step(const PowerSeries& v, const PowerSeries& w_partial, std::size_t n) {
  if (v.empty() || v[0] == cd{}) throw std::domain_error("reciprocal of series with zero leading term");
  if (n == 0) return 1.0 / v[0];
  // sum_{m=0}^{n} w[m] v[n-m] = 0, with w[n] the only unknown.
  const cd known = convolve_at(v, w_partial, n, 0, n - 1);
  return -known / v[0];
}

double magnitude_step(const PowerSeries& v, const RealSeries& m_partial, std::size_t n) {
  if (n == 0) return v.empty() ? 0.0 : std::abs(v[0]);
  if (m_partial.empty() || m_partial[0] == 0.0)
    throw std::domain_error("magnitude series with zero leading term");
  const double vv = convolve_conj_at(v, v, n, 0, n).real();
  const double mm = convolve_at(m_partial, m_partial, n, 1, n - 1);
  return (vv - mm) / (2.0 * m_partial[0]);
}

PowerSeries reciprocal(const PowerSeries& v) {
  PowerSeries w;
  for (std::size_t n = 0; n < v.size(); ++n) w.push_back(reciprocal_step(v, w, n));
  return w;
}

RealSeries magnitude(const PowerSeries& v) {
  RealSeries m;
  for (std::size_t n = 0; n < v.size(); ++n) m.push_back(magnitude_step(v, m, n));
  return m;
}

PowerSeries multiply(const PowerSeries& a, const PowerSeries& b, std::size_t terms) {
  PowerSeries out;
  for (std::size_t n = 0; n < terms; ++n) out.push_back(convolve_at(a, b, n, 0, n));
  return out;
}

PowerSeries derivative(const PowerSeries& v) {
  PowerSeries d;
  for (std::size_t n = 1; n < v.size(); ++n) d.push_back(static_cast<double>(n) * v[n]);
  return d;
}

PowerSeries divide(const PowerSeries& num, const PowerSeries& den, std::size_t terms) {
  if (den.empty() || den[0] == cd{}) throw std::domain_error("division by series with zero leading term");
  PowerSeries q;
  for (std::size_t n = 0; n < terms; ++n) {
    const cd known = n == 0 ? cd{} : convolve_at(den, q, n, 0, n - 1);
    q.push_back((num.at_or_zero(n) - known) / den[0]);
  }
  return q;
}

}  // namespace hemvsa
