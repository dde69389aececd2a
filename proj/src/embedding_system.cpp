#include "hemvsa/embedding_system.hpp"

#include <cmath>

#include "hemvsa/error.hpp"

namespace hemvsa {

EmbeddingSystem::EmbeddingSystem(const Network& network, std::span<const Complex> v0,
                                 std::span<const Complex> w0,
                                 std::span<const Complex> pv_constant, const char* stage)
    : network_(&network) {
  const std::size_t n = network.size();
  offset_.resize(n);
  Eigen::Index dim = 0;
  for (std::size_t i = 0; i < n; ++i) {
    offset_[i] = dim;
    dim += network.bus(i).kind == BusKind::PV ? 5 : 2;
  }
  matrix_ = Eigen::MatrixXd::Zero(dim, dim);
  const auto& y = network.y();

  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Index r = offset_[i];
    const Bus& b = network.bus(i);
    if (b.kind == BusKind::Slack) {
      matrix_(r, r) = 1.0;
      matrix_(r + 1, r + 1) = 1.0;
      continue;
    }
    for (std::size_t k = 0; k < n; ++k) {
      const Complex yik = y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      if (yik == Complex{}) continue;
      const Eigen::Index c = offset_[k];
      matrix_(r, c) += yik.real();
      matrix_(r, c + 1) -= yik.imag();
      matrix_(r + 1, c) += yik.imag();
      matrix_(r + 1, c + 1) += yik.real();
    }
    if (b.kind != BusKind::PV) continue;

    const Complex cst = pv_constant[i];
    const Complex vz = v0[i];
    const Complex wz = w0[i];
    // -c W*[n]
    matrix_(r, r + 2) += -cst.real();
    matrix_(r, r + 3) += -cst.imag();
    matrix_(r + 1, r + 2) += -cst.imag();
    matrix_(r + 1, r + 3) += cst.real();
    // + j Q[n] W*[0]
    matrix_(r, r + 4) += wz.imag();
    matrix_(r + 1, r + 4) += wz.real();
    // W[n] V[0] + W[0] V[n]
    matrix_(r + 2, r + 2) = vz.real();
    matrix_(r + 2, r + 3) = -vz.imag();
    matrix_(r + 2, r) = wz.real();
    matrix_(r + 2, r + 1) = -wz.imag();
    matrix_(r + 3, r + 2) = vz.imag();
    matrix_(r + 3, r + 3) = vz.real();
    matrix_(r + 3, r) = wz.imag();
    matrix_(r + 3, r + 1) = wz.real();
    // Re(V[n] V*[0])
    matrix_(r + 4, r) = vz.real();
    matrix_(r + 4, r + 1) = vz.imag();
  }

  lu_.compute(matrix_);
  const double rcond = lu_.rcond();
  if (!(rcond > 1e-14))
    throw NumericError(stage, "recursion matrix is singular (rcond " + std::to_string(rcond) + ")");
}

EmbeddingSystem::Solution EmbeddingSystem::solve(const Rhs& rhs) const {
  const std::size_t n = network_->size();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(matrix_.rows());
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Index r = offset_[i];
    const auto kind = network_->bus(i).kind;
    if (kind == BusKind::Slack) continue;
    b(r) = rhs.power[i].real();
    b(r + 1) = rhs.power[i].imag();
    if (kind == BusKind::PV) {
      b(r + 2) = rhs.recip[i].real();
      b(r + 3) = rhs.recip[i].imag();
      b(r + 4) = rhs.magnitude[i];
    }
  }
  const Eigen::VectorXd x = lu_.solve(b);
  Solution out{std::vector<Complex>(n), std::vector<Complex>(n), std::vector<double>(n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Index r = offset_[i];
    // Slack rows pin V[n] to zero for n >= 1; drop the solver's rounding.
    if (network_->bus(i).kind == BusKind::Slack) continue;
    out.v[i] = {x(r), x(r + 1)};
    if (network_->bus(i).kind == BusKind::PV) {
      out.w[i] = {x(r + 2), x(r + 3)};
      out.q[i] = x(r + 4);
    }
  }
  return out;
}

}  // namespace hemvsa
