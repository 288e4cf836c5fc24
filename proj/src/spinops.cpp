#include "dipsim/spinops.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dipsim {

namespace {

constexpr double kPi = std::numbers::pi;
const Complex kI(0.0, 1.0);

// Bit of `spin` in basis index a (spin 0 = most significant bit).
inline int bit_of(int a, int n, int spin) { return (a >> (n - 1 - spin)) & 1; }
inline int mask_of(int n, int spin) { return 1 << (n - 1 - spin); }

// Accumulate A acting on site i (identity elsewhere): out += w * A_i.
void add_one_site(Operator& out, int n, int i, const Eigen::Matrix2cd& a, double w) {
  const int dim = static_cast<int>(out.rows());
  const int mi = mask_of(n, i);
  for (int col = 0; col < dim; ++col) {
    int bi = (col & mi) ? 1 : 0;
    for (int bi2 = 0; bi2 < 2; ++bi2) {
      Complex v = a(bi2, bi);
      if (v == Complex(0, 0)) continue;
      int row = (col & ~mi) | (bi2 ? mi : 0);
      out(row, col) += w * v;
    }
  }
}

// Accumulate A_i B_j (i != j, identity elsewhere): out += w * A_i B_j.
void add_two_site(Operator& out, int n, int i, int j, const Eigen::Matrix2cd& a,
                  const Eigen::Matrix2cd& b, double w) {
  const int dim = static_cast<int>(out.rows());
  const int mi = mask_of(n, i);
  const int mj = mask_of(n, j);
  for (int col = 0; col < dim; ++col) {
    int bi = (col & mi) ? 1 : 0;
    int bj = (col & mj) ? 1 : 0;
    for (int bi2 = 0; bi2 < 2; ++bi2) {
      for (int bj2 = 0; bj2 < 2; ++bj2) {
        Complex v = a(bi2, bi) * b(bj2, bj);
        if (v == Complex(0, 0)) continue;
        int row = (col & ~mi & ~mj) | (bi2 ? mi : 0) | (bj2 ? mj : 0);
        out(row, col) += w * v;
      }
    }
  }
}

Eigen::Matrix2cd sx2() {
  Eigen::Matrix2cd m;
  m << 0, 0.5, 0.5, 0;
  return m;
}
Eigen::Matrix2cd sy2() {
  Eigen::Matrix2cd m;
  m << 0, Complex(0, -0.5), Complex(0, 0.5), 0;
  return m;
}
Eigen::Matrix2cd sz2() {
  Eigen::Matrix2cd m;
  m << 0.5, 0, 0, -0.5;
  return m;
}

void check_pair_table(const CouplingTable& b) {
  if (b.n_spins() < 1) throw std::invalid_argument("empty coupling table");
  dim_for(b.n_spins());
}

}  // namespace

int dim_for(int n_spins) {
  if (n_spins < 1 || n_spins > 12)
    throw std::invalid_argument("n_spins must be between 1 and 12");
  return 1 << n_spins;
}

Eigen::Matrix2cd spin_half_matrix(const SpinAxis& axis) {
  if (axis.is_z()) return sz2();
  double phi = axis.phase();
  Eigen::Matrix2cd m;
  m << 0, 0.5 * std::exp(-kI * phi), 0.5 * std::exp(kI * phi), 0;
  return m;
}

Operator single_spin_op(int n_spins, int spin, const SpinAxis& axis) {
  int dim = dim_for(n_spins);
  if (spin < 0 || spin >= n_spins) throw std::invalid_argument("spin index out of range");
  Operator out = Operator::Zero(dim, dim);
  add_one_site(out, n_spins, spin, spin_half_matrix(axis), 1.0);
  return out;
}

Operator collective_op(int n_spins, const SpinAxis& axis) {
  int dim = dim_for(n_spins);
  Operator out = Operator::Zero(dim, dim);
  Eigen::Matrix2cd a = spin_half_matrix(axis);
  for (int i = 0; i < n_spins; ++i) add_one_site(out, n_spins, i, a, 1.0);
  return out;
}

Operator dipolar_hamiltonian(const CouplingTable& b) {
  check_pair_table(b);
  int n = b.n_spins();
  int dim = dim_for(n);
  Operator out = Operator::Zero(dim, dim);
  Eigen::Matrix2cd x = sx2(), y = sy2(), z = sz2();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double w = 2 * kPi * b.b(i, j);
      if (w == 0.0) continue;
      add_two_site(out, n, i, j, z, z, 2.0 * w);   // 3 IzIz - IzIz
      add_two_site(out, n, i, j, x, x, -1.0 * w);
      add_two_site(out, n, i, j, y, y, -1.0 * w);
    }
  }
  return out;
}

Operator ising_hamiltonian(const CouplingTable& b) {
  check_pair_table(b);
  int n = b.n_spins();
  int dim = dim_for(n);
  Operator out = Operator::Zero(dim, dim);
  Eigen::Matrix2cd z = sz2();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (b.b(i, j) != 0.0) add_two_site(out, n, i, j, z, z, 2.0 * 2 * kPi * b.b(i, j));
  return out;
}

RotatedDipolarOps rotated_dipolar_ops(const CouplingTable& b) {
  check_pair_table(b);
  int n = b.n_spins();
  int dim = dim_for(n);
  RotatedDipolarOps ops{Operator::Zero(dim, dim), Operator::Zero(dim, dim),
                        Operator::Zero(dim, dim)};
  Eigen::Matrix2cd x = sx2(), y = sy2(), z = sz2();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double w = 2 * kPi * b.b(i, j);
      if (w == 0.0) continue;
      // hyy = 2 IyIy - IxIx - IzIz
      add_two_site(ops.hyy, n, i, j, y, y, 2.0 * w);
      add_two_site(ops.hyy, n, i, j, x, x, -1.0 * w);
      add_two_site(ops.hyy, n, i, j, z, z, -1.0 * w);
      // ha = (3/2)(IxIz + IzIx)
      add_two_site(ops.ha, n, i, j, x, z, 1.5 * w);
      add_two_site(ops.ha, n, i, j, z, x, 1.5 * w);
      // hs = (3/2)(IzIz - IxIx)
      add_two_site(ops.hs, n, i, j, z, z, 1.5 * w);
      add_two_site(ops.hs, n, i, j, x, x, -1.5 * w);
    }
  }
  return ops;
}

Operator free_hamiltonian(const CouplingTable& b, double offset_hz) {
  Operator h = dipolar_hamiltonian(b);
  if (offset_hz != 0.0) h += 2 * kPi * offset_hz * collective_op(b.n_spins(), SpinAxis::z());
  return h;
}

Operator pulse_hamiltonian(const Operator& h0, const SpinAxis& axis, double f1_hz) {
  int dim = static_cast<int>(h0.rows());
  int n = 0;
  while ((1 << n) < dim) ++n;
  if ((1 << n) != dim || h0.cols() != dim)
    throw std::invalid_argument("h0 must be square with power-of-two dimension");
  return h0 - 2 * kPi * f1_hz * collective_op(n, axis);
}

double hermiticity_defect(const Operator& a) {
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

double unitarity_defect(const Operator& u) {
  Operator g = u.adjoint() * u;
  g.diagonal().array() -= 1.0;
  return g.cwiseAbs().maxCoeff();
}

Operator propagator(const Operator& h, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("propagator: duration must be >= 0");
  double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if (hermiticity_defect(h) > 1e-12 * scale)
    throw std::invalid_argument("propagator: hamiltonian is not hermitian");
  Eigen::SelfAdjointEigenSolver<Operator> es(h);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  Eigen::VectorXcd phases =
      ((-kI * t) * es.eigenvalues().cast<Complex>().array()).exp();
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

Operator kron_power(const Eigen::Matrix2cd& u, int n_spins) {
  dim_for(n_spins);
  Operator acc = u;
  for (int k = 1; k < n_spins; ++k) {
    Operator next(acc.rows() * 2, acc.cols() * 2);
    next.topLeftCorner(acc.rows(), acc.cols()) = u(0, 0) * acc;
    next.topRightCorner(acc.rows(), acc.cols()) = u(0, 1) * acc;
    next.bottomLeftCorner(acc.rows(), acc.cols()) = u(1, 0) * acc;
    next.bottomRightCorner(acc.rows(), acc.cols()) = u(1, 1) * acc;
    acc.swap(next);
  }
  return acc;
}

Operator delta_pulse(int n_spins, double angle, const SpinAxis& axis) {
  dim_for(n_spins);
  Eigen::Matrix2cd u;
  if (axis.is_z()) {
    u << std::exp(kI * (angle / 2)), 0, 0, std::exp(-kI * (angle / 2));
  } else {
    double c = std::cos(angle / 2), s = std::sin(angle / 2);
    double phi = axis.phase();
    u << c, kI * s * std::exp(-kI * phi), kI * s * std::exp(kI * phi), c;
  }
  // note: kron of u per spin, because exp(+i angle I_T) factorizes over sites
  return kron_power(u, n_spins);
}

namespace {

Operator expm_of(const Operator& a) {
  const int dim = static_cast<int>(a.rows());
  double nrm = a.cwiseAbs().rowwise().sum().maxCoeff();  // inf-norm
  int s = 0;
  if (nrm > 0.5) s = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
  Operator b = a / std::pow(2.0, s);
  Operator sum = Operator::Identity(dim, dim);
  Operator term = Operator::Identity(dim, dim);
  for (int k = 1; k <= 64; ++k) {
    term = (term * b) / static_cast<double>(k);
    sum += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18 * sum.cwiseAbs().maxCoeff()) break;
  }
  for (int k = 0; k < s; ++k) sum = sum * sum;
  return sum;
}

}  // namespace

Operator expm_minus_i(const Operator& h, double t) {
  if (h.rows() != h.cols()) throw std::invalid_argument("expm_minus_i: matrix must be square");
  return expm_of((-kI * t) * h);
}

Operator trotter_oracle(const std::vector<TrotterPiece>& pieces, double dt) {
  if (pieces.empty()) throw std::invalid_argument("trotter_oracle: no pieces");
  if (!(dt > 0.0)) throw std::invalid_argument("trotter_oracle: dt must be > 0");
  const int dim = static_cast<int>(pieces.front().h.rows());
  Operator total = Operator::Identity(dim, dim);
  for (const auto& piece : pieces) {
    if (piece.h.rows() != dim || piece.h.cols() != dim)
      throw std::invalid_argument("trotter_oracle: inconsistent dimensions");
    if (piece.duration == 0.0) continue;
    double steps_f = piece.duration / dt;
    long long m = std::llround(steps_f);
    if (m < 1 || std::fabs(m * dt - piece.duration) > 1e-9 * std::max(piece.duration, dt))
      throw std::invalid_argument("trotter_oracle: dt must divide piece durations");
    Operator step = expm_minus_i(piece.h, dt);
    Operator u = Operator::Identity(dim, dim);
    for (long long k = 0; k < m; ++k) u = step * u;
    total = u * total;
  }
  return total;
}

}  // namespace dipsim
