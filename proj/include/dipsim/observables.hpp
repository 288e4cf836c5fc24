#pragma once

#include <string>
#include <vector>

#include "dipsim/spinops.hpp"

namespace dipsim {

// Coherence-order spectrum of a density matrix: element rho_ab contributes to
// order q = M_a - M_b (difference of total-Iz quantum numbers), and
//   A_q = sqrt( sum_{a,b: q} |rho_ab|^2 ).
// Orders run from -n_spins to +n_spins.
struct CoherenceSpectrum {
  std::vector<int> order;
  std::vector<double> amplitude;
};
CoherenceSpectrum coherence_orders(const Operator& rho, int n_spins);

// Total-Iz quantum number of basis index a (spin 0 = most significant bit,
// bit 0 = up): (n - 2 popcount)/2.
double basis_mz(int n_spins, int a);

// Permutation that sorts basis states by (M_z descending, index ascending);
// used for the snapshot image layout.
std::vector<int> mz_sorted_basis(int n_spins);

// Density-matrix snapshot exports. The PPM image is dim x dim, basis sorted
// by mz_sorted_basis on both axes. Colors encode the complex phase: white at
// phase 0, red at +pi/2, blue at -pi/2 (linear in between, saturated beyond),
// scaled by |rho_ab| / max|rho|; entries below threshold * max|rho| are black.
void write_snapshot_ppm(const std::string& path, const Operator& rho, int n_spins,
                        double threshold);

// JSON export: matrix in the computational basis plus metadata. n_averaged
// counts the realizations averaged into rho (1 = single realization).
void write_snapshot_json(const std::string& path, const Operator& rho, int n_spins,
                         int echo_index, double time_s, int pulses_applied,
                         int n_averaged = 1);

}  // namespace dipsim
