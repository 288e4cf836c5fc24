#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dipsim/coupling_table.hpp"

namespace dipsim {

// Baked constants (SI). Overridable so unit tests can pin exact values.
struct PhysicalConstants {
  double mu0_over_4pi = 1e-7;      // T m / A
  double hbar = 1.054571817e-34;   // J s (CODATA 2018)
};

// Crystal description. Either cell+basis (basis in fractional coordinates of
// the cell vectors, which are the columns of `cell`, in meters) or an explicit
// absolute site list in meters. A site at the origin hosts the central spin.
struct LatticeSpec {
  std::string name = "custom";
  Eigen::Matrix3d cell = Eigen::Matrix3d::Zero();
  std::vector<Eigen::Vector3d> basis;  // fractional
  std::vector<Eigen::Vector3d> sites;  // absolute, meters; non-empty => explicit list

  // Diamond structure: conventional cubic cell with 8-site basis (fcc + the
  // (1/4,1/4,1/4) shifted copy). Default a is silicon's lattice constant.
  static LatticeSpec diamond(double a = 5.431e-10);
  // fcc: conventional cubic cell with 4-site basis.
  static LatticeSpec fcc(double a);
  static LatticeSpec custom_cell(const Eigen::Matrix3d& cell,
                                 std::vector<Eigen::Vector3d> basis_frac);
  static LatticeSpec custom_sites(std::vector<Eigen::Vector3d> sites);

  // Number of sites per unit volume (cell/basis form only).
  double site_density() const;
};

// All candidate sites with |r| <= radius. First entry is the origin site;
// the rest are sorted by (distance, x, y, z). For explicit site lists the
// list is first translated so the site nearest the origin sits exactly at it.
std::vector<Eigen::Vector3d> generate_sites(const LatticeSpec& lat, double radius);

enum class SpinSelection { StrongestCoupling, NearestDistance };

struct DisorderConfig {
  int n_spins = 4;
  double abundance = 1.0;          // occupation probability per site
  double gamma_over_2pi = 0.0;     // gyromagnetic ratio / 2pi, Hz/T
  double gamma_scale = 1.0;        // multiplies gamma (couplings scale as square)
  double offset_fwhm = 0.0;        // FWHM of the Gaussian Zeeman offset, Hz
  double radius = 0.0;             // shell radius in meters; 0 = automatic
  SpinSelection selection = SpinSelection::StrongestCoupling;

  void validate() const;  // throws std::invalid_argument
};

// One disorder realization: rotated positions (central spin first), the
// shared Zeeman offset, and the full pairwise coupling table.
struct Realization {
  std::vector<Eigen::Vector3d> positions;  // meters
  double offset_hz = 0.0;
  CouplingTable couplings;
  std::uint64_t seed = 0;
  int occupied_sites = 0;  // occupied count within the shell actually used
  double radius_used = 0.0;
};

// Secular dipolar B_ij in Hz between two sites, external field along +z:
//   B = (mu0/4pi) * gamma^2 * hbar * (1 - 3 cos^2 theta) / (2 * 2pi * r^3)
// gamma_rad in rad/s/T.
double coupling_b(const Eigen::Vector3d& ri, const Eigen::Vector3d& rj, double gamma_rad,
                  const PhysicalConstants& pc = {});

// Full pairwise table for a set of positions.
CouplingTable coupling_constants(const std::vector<Eigen::Vector3d>& positions,
                                 double gamma_over_2pi, double gamma_scale = 1.0,
                                 const PhysicalConstants& pc = {});

// Gaussian Zeeman offset with the given full width at half maximum, drawn
// from the stream used by sample_realization.
double sample_offset(double fwhm_hz, std::uint64_t seed);

// Smallest shell radius whose expected occupied-site count is at least
// 4 * n_spins (grown from an analytic estimate by actual enumeration).
double auto_radius(const LatticeSpec& lat, const DisorderConfig& cfg);

// Draw one realization. Sub-streams of `seed` (see rng.hpp mix_seed): stream 1
// lattice orientation, stream 2 Zeeman offset, stream 3+k occupancy attempt k.
// Each attempt enlarges the shell by 1.5x; gives up after 6 attempts.
Realization sample_realization(const LatticeSpec& lat, const DisorderConfig& cfg,
                               std::uint64_t seed, const PhysicalConstants& pc = {});

}  // namespace dipsim
