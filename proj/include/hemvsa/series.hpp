#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <vector>

namespace hemvsa {

/// Truncated power series c[0] + c[1] s + ... + c[N] s^N.
/// The length is whatever the caller has computed so far; the series never
/// extends itself.
template <typename T>
class Series {
 public:
  Series() = default;
  Series(std::initializer_list<T> coeffs) : c_(coeffs) {}
  explicit Series(std::vector<T> coeffs) : c_(std::move(coeffs)) {}

  std::size_t size() const { return c_.size(); }
  bool empty() const { return c_.empty(); }

  const T& operator[](std::size_t n) const { return c_[n]; }
  T& operator[](std::size_t n) { return c_[n]; }

  /// Coefficient n, or zero when not (yet) computed.
  T at_or_zero(std::size_t n) const { return n < c_.size() ? c_[n] : T{}; }

  void push_back(T value) { c_.push_back(value); }
  void resize(std::size_t n) { c_.resize(n); }

  std::span<const T> coeffs() const { return c_; }
  const std::vector<T>& vec() const { return c_; }

  /// Horner evaluation at real s.
  T eval(double s) const {
    T acc{};
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * s + *it;
    return acc;
  }

  /// Evaluation of the first `terms` coefficients only.
  T eval(double s, std::size_t terms) const {
    T acc{};
    const std::size_t n = std::min(terms, c_.size());
    for (std::size_t k = n; k-- > 0;) acc = acc * s + c_[k];
    return acc;
  }

  bool operator==(const Series&) const = default;

 private:
  std::vector<T> c_;
};

using PowerSeries = Series<std::complex<double>>;
using RealSeries = Series<double>;

/// sum_{m=lo}^{hi} a[n-m] * b[m]; terms beyond either series' length are
/// treated as absent. Empty when lo > hi.
template <typename T, typename U>
auto convolve_at(const Series<T>& a, const Series<U>& b, std::size_t n, std::size_t lo,
                 std::size_t hi) {
  using R = decltype(T{} * U{});
  R acc{};
  if (lo > hi) return acc;
  for (std::size_t m = lo; m <= hi && m <= n; ++m) {
    const std::size_t j = n - m;
    if (j < a.size() && m < b.size()) acc += a[j] * b[m];
  }
  return acc;
}

/// Conjugated companion of convolve_at: sum_{m=lo}^{hi} a[n-m] * conj(b[m]).
std::complex<double> convolve_conj_at(const PowerSeries& a, const PowerSeries& b,
                                      std::size_t n, std::size_t lo, std::size_t hi);

/// Next coefficient w[n] of w = 1/v given w[0..n-1] (w[0] = 1/v[0]).
/// Throws std::domain_error when v[0] == 0.
std::complex<double> reciprocal_step(const PowerSeries& v, const PowerSeries& w_partial,
                                     std::size_t n);

/// Next coefficient m[n] of the real series with m(s)^2 = v(s) v*(s*),
/// given m[0..n-1] (m[0] = |v[0]|). Throws std::domain_error when m[0] == 0.
double magnitude_step(const PowerSeries& v, const RealSeries& m_partial, std::size_t n);

/// Full reciprocal / magnitude series through the length of v.
PowerSeries reciprocal(const PowerSeries& v);
RealSeries magnitude(const PowerSeries& v);

/// Coefficients of the product a*b truncated to `terms`.
PowerSeries multiply(const PowerSeries& a, const PowerSeries& b, std::size_t terms);

/// Term-wise derivative d/ds.
PowerSeries derivative(const PowerSeries& v);

/// Quotient series num/den truncated to `terms` (den[0] != 0).
PowerSeries divide(const PowerSeries& num, const PowerSeries& den, std::size_t terms);

}  // namespace hemvsa
