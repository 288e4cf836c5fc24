#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "dipsim/axis.hpp"
#include "dipsim/coupling_table.hpp"

namespace dipsim {

using Complex = std::complex<double>;
using Operator = Eigen::MatrixXcd;

// Basis convention: product basis of spin-1/2 states, spin 0 in the most
// significant bit, bit value 0 = up (m = +1/2). Dimension 2^n.
//
// Unit convention: all Hamiltonian builders return H/hbar in rad/s; coupling
// constants and frequency arguments are plain Hz and are multiplied by 2*pi
// internally. Spin operators themselves are dimensionless (I_z = diag(.5,-.5)).

int dim_for(int n_spins);  // 2^n; throws unless 1 <= n <= 12

// Single-spin operator I_axis on `spin`, identity elsewhere.
Operator single_spin_op(int n_spins, int spin, const SpinAxis& axis);

// Collective operator I_axis,T = sum_i I_axis,i.
Operator collective_op(int n_spins, const SpinAxis& axis);

// Secular dipolar coupling: sum_{i<j} 2 pi B_ij (3 I_zi I_zj - I_i . I_j).
Operator dipolar_hamiltonian(const CouplingTable& b);

// Ising part only: sum_{i<j} 2 pi B_ij 2 I_zi I_zj (no flip-flop terms).
Operator ising_hamiltonian(const CouplingTable& b);

// Dipolar operator rotated z->y plus the two pieces it splits into under a
// frame toggled about Y:
//   hyy = sum 2 pi B (3 I_yi I_yj - I_i . I_j)
//   ha  = sum 2 pi B (3/2)(I_xi I_zj + I_zi I_xj)   (antisymmetric under x<->z)
//   hs  = sum 2 pi B (3/2)(I_zi I_zj - I_xi I_xj)   (symmetric under x<->z)
struct RotatedDipolarOps {
  Operator hyy, ha, hs;
};
RotatedDipolarOps rotated_dipolar_ops(const CouplingTable& b);

// Free Hamiltonian: dipolar coupling plus collective offset 2 pi f_z I_zT.
Operator free_hamiltonian(const CouplingTable& b, double offset_hz);

// Hamiltonian during an rf pulse of strength omega1/2pi = f1 (Hz) along
// `axis`: -2 pi f1 I_axis,T + h0.
Operator pulse_hamiltonian(const Operator& h0, const SpinAxis& axis, double f1_hz);

// exp(-i h t) for hermitian h (rad/s) via eigendecomposition. Throws if h is
// not hermitian to roundoff or t < 0.
Operator propagator(const Operator& h, double t);

// Ideal (zero-width) pulse propagator exp(+i angle I_axis,T), built as a
// Kronecker power of the exact 2x2 rotation. `angle` in radians.
Operator delta_pulse(int n_spins, double angle, const SpinAxis& axis);

// exp(-i h t) by scaling-and-squaring power series; works for any square
// matrix and shares no code with the eigensolver path (used as a cross-check
// and by trotter_oracle).
Operator expm_minus_i(const Operator& h, double t);

// Time-ordered product of exact step propagators: each piece of duration T_k
// is applied as [exp(-i h_k dt)]^(T_k/dt) in order. dt must divide every
// duration to 1e-9 relative.
struct TrotterPiece {
  Operator h;
  double duration;
};
Operator trotter_oracle(const std::vector<TrotterPiece>& pieces, double dt);

// max |A - A^dagger| entrywise.
double hermiticity_defect(const Operator& a);
// max |U^dagger U - 1| entrywise.
double unitarity_defect(const Operator& u);

// Kronecker power u (x) u (x) ... (n factors), spin 0 leftmost.
Operator kron_power(const Eigen::Matrix2cd& u, int n_spins);

// 2x2 spin-1/2 matrix for an axis (I_z or I_phi).
Eigen::Matrix2cd spin_half_matrix(const SpinAxis& axis);

}  // namespace dipsim
