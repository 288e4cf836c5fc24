#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <utility>

namespace dipsim {

// Pairwise secular dipolar coupling constants B_ij in Hz: the coefficients
// multiplying [3 I_zi I_zj - I_i . I_j] in the coupling Hamiltonian (as H/h).
// Symmetric with zero diagonal.
struct CouplingTable {
  Eigen::MatrixXd b;

  CouplingTable() = default;

  explicit CouplingTable(Eigen::MatrixXd m) : b(std::move(m)) {
    if (b.rows() != b.cols()) throw std::invalid_argument("coupling table must be square");
    double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
    if ((b - b.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
      throw std::invalid_argument("coupling table must be symmetric");
    if (b.diagonal().cwiseAbs().maxCoeff() > 1e-9 * scale)
      throw std::invalid_argument("coupling table diagonal must be zero");
  }

  static CouplingTable zeros(int n) { return CouplingTable(Eigen::MatrixXd::Zero(n, n)); }

  int n_spins() const { return static_cast<int>(b.rows()); }
};

}  // namespace dipsim
