#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hemvsa/netmodel.hpp"

namespace hemvsa {

/// Real-valued recursion matrix shared by the germ and the final embedding.
///
/// Unknowns per bus, in bus order: slack and PQ buses carry (Re V[n], Im V[n]);
/// PV buses carry (Re V[n], Im V[n], Re W[n], Im W[n], Q[n]). The matrix
/// depends only on Y and order-0 quantities, so it is factored once and
/// reused for every order n >= 1. Dimension is 2l + 2m + 5p.
///
/// PV rows (power balance, reciprocal identity, magnitude):
///   sum_k Y_ik V_k[n] - c_i W_i*[n] + j Q_i[n] W_i*[0]  = power_i
///   W_i[n] V_i[0] + W_i[0] V_i[n]                       = recip_i
///   Re(V_i[n] V_i*[0])                                  = magnitude_i
/// where c_i = P_i - j Q_i[0] is the constant part of the PV injection
/// (zero while computing the germ).
class EmbeddingSystem {
 public:
  struct Rhs {
    std::vector<Complex> power;    // per bus (PQ and PV rows)
    std::vector<Complex> recip;    // per bus (PV only)
    std::vector<double> magnitude; // per bus (PV only)
    explicit Rhs(std::size_t n) : power(n), recip(n), magnitude(n) {}
  };

  struct Solution {
    std::vector<Complex> v;  // every bus
    std::vector<Complex> w;  // PV buses; zero elsewhere
    std::vector<double> q;   // PV buses; zero elsewhere
  };

  /// v0/w0 are the order-0 voltages and reciprocals; pv_constant holds c_i.
  /// Throws NumericError("<stage>") when the matrix is singular.
  EmbeddingSystem(const Network& network, std::span<const Complex> v0,
                  std::span<const Complex> w0, std::span<const Complex> pv_constant,
                  const char* stage);

  std::size_t dimension() const { return static_cast<std::size_t>(matrix_.rows()); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }

  Solution solve(const Rhs& rhs) const;

  /// Expected dimension for a bus mix, 2l + 2m + 5p.
  static std::size_t dimension_for(std::size_t l, std::size_t m, std::size_t p) {
    return 2 * l + 2 * m + 5 * p;
  }

 private:
  const Network* network_;
  std::vector<Eigen::Index> offset_;
  Eigen::MatrixXd matrix_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

}  // namespace hemvsa
