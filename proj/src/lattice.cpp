#include "dipsim/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "dipsim/rng.hpp"

namespace dipsim {

namespace {

constexpr double kPi = std::numbers::pi;

// fcc fractional basis of the conventional cubic cell.
std::vector<Eigen::Vector3d> fcc_basis() {
  return {{0, 0, 0}, {0, 0.5, 0.5}, {0.5, 0, 0.5}, {0.5, 0.5, 0}};
}

struct SiteLess {
  bool operator()(const Eigen::Vector3d& a, const Eigen::Vector3d& b) const {
    double ra = a.squaredNorm(), rb = b.squaredNorm();
    if (ra != rb) return ra < rb;
    if (a.x() != b.x()) return a.x() < b.x();
    if (a.y() != b.y()) return a.y() < b.y();
    return a.z() < b.z();
  }
};

}  // namespace

LatticeSpec LatticeSpec::diamond(double a) {
  if (!(a > 0)) throw std::invalid_argument("lattice constant must be positive");
  LatticeSpec lat;
  lat.name = "diamond";
  lat.cell = a * Eigen::Matrix3d::Identity();
  lat.basis = fcc_basis();
  for (const auto& f : fcc_basis()) lat.basis.push_back(f + Eigen::Vector3d(0.25, 0.25, 0.25));
  return lat;
}

LatticeSpec LatticeSpec::fcc(double a) {
  if (!(a > 0)) throw std::invalid_argument("lattice constant must be positive");
  LatticeSpec lat;
  lat.name = "fcc";
  lat.cell = a * Eigen::Matrix3d::Identity();
  lat.basis = fcc_basis();
  return lat;
}

LatticeSpec LatticeSpec::custom_cell(const Eigen::Matrix3d& cell,
                                     std::vector<Eigen::Vector3d> basis_frac) {
  if (std::fabs(cell.determinant()) <= 0)
    throw std::invalid_argument("lattice vectors must span a volume");
  if (basis_frac.empty()) throw std::invalid_argument("basis must not be empty");
  LatticeSpec lat;
  lat.name = "custom";
  lat.cell = cell;
  lat.basis = std::move(basis_frac);
  return lat;
}

LatticeSpec LatticeSpec::custom_sites(std::vector<Eigen::Vector3d> sites) {
  if (sites.empty()) throw std::invalid_argument("site list must not be empty");
  LatticeSpec lat;
  lat.name = "custom";
  lat.sites = std::move(sites);
  return lat;
}

double LatticeSpec::site_density() const {
  if (!sites.empty() || basis.empty())
    throw std::logic_error("site_density requires cell/basis form");
  return static_cast<double>(basis.size()) / std::fabs(cell.determinant());
}

std::vector<Eigen::Vector3d> generate_sites(const LatticeSpec& lat, double radius) {
  if (!(radius > 0)) throw std::invalid_argument("radius must be positive");
  std::vector<Eigen::Vector3d> out;

  if (!lat.sites.empty()) {
    // Explicit list: recenter on the site nearest the origin.
    std::size_t central = 0;
    for (std::size_t i = 1; i < lat.sites.size(); ++i)
      if (lat.sites[i].squaredNorm() < lat.sites[central].squaredNorm()) central = i;
    Eigen::Vector3d shift = lat.sites[central];
    for (const auto& s : lat.sites) {
      Eigen::Vector3d r = s - shift;
      if (r.norm() <= radius) out.push_back(r);
    }
  } else {
    if (lat.basis.empty()) throw std::invalid_argument("lattice has no basis");
    double max_basis = 0;
    std::vector<Eigen::Vector3d> cart;
    cart.reserve(lat.basis.size());
    for (const auto& f : lat.basis) {
      cart.push_back(lat.cell * f);
      max_basis = std::max(max_basis, cart.back().norm());
    }
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(lat.cell);
    double sigma_min = svd.singularValues().minCoeff();
    if (!(sigma_min > 0)) throw std::invalid_argument("lattice vectors are singular");
    int kmax = static_cast<int>(std::ceil((radius + max_basis) / sigma_min)) + 1;
    if (kmax > 64) throw std::invalid_argument("shell radius too large for this cell");
    for (int i = -kmax; i <= kmax; ++i) {
      for (int j = -kmax; j <= kmax; ++j) {
        for (int k = -kmax; k <= kmax; ++k) {
          Eigen::Vector3d cell_origin =
              lat.cell * Eigen::Vector3d(static_cast<double>(i), static_cast<double>(j),
                                         static_cast<double>(k));
          for (const auto& c : cart) {
            Eigen::Vector3d r = cell_origin + c;
            if (r.norm() <= radius) out.push_back(r);
          }
        }
      }
    }
    if (out.size() > 500000) throw std::invalid_argument("shell contains too many sites");
  }

  std::sort(out.begin(), out.end(), SiteLess{});
  if (out.empty() || out.front().norm() > 1e-15)
    throw std::invalid_argument("no lattice site at the origin for the central spin");
  return out;
}

void DisorderConfig::validate() const {
  if (n_spins < 2 || n_spins > 12)
    throw std::invalid_argument("n_spins must be between 2 and 12");
  if (!(abundance > 0.0 && abundance <= 1.0))
    throw std::invalid_argument("abundance must be in (0, 1]");
  if (!(gamma_over_2pi > 0)) throw std::invalid_argument("gamma_over_2pi must be positive");
  if (!(gamma_scale > 0)) throw std::invalid_argument("gamma_scale must be positive");
  if (offset_fwhm < 0) throw std::invalid_argument("offset_fwhm must be >= 0");
  if (radius < 0) throw std::invalid_argument("radius must be >= 0");
}

double coupling_b(const Eigen::Vector3d& ri, const Eigen::Vector3d& rj, double gamma_rad,
                  const PhysicalConstants& pc) {
  Eigen::Vector3d d = rj - ri;
  double r = d.norm();
  if (!(r > 0)) throw std::invalid_argument("coincident spin positions");
  double cos_t = d.z() / r;
  // B/h in Hz; the trailing 2pi converts the hbar-based energy to h units.
  return pc.mu0_over_4pi * gamma_rad * gamma_rad * pc.hbar * (1.0 - 3.0 * cos_t * cos_t) /
         (2.0 * 2.0 * kPi * r * r * r);
}

CouplingTable coupling_constants(const std::vector<Eigen::Vector3d>& positions,
                                 double gamma_over_2pi, double gamma_scale,
                                 const PhysicalConstants& pc) {
  int n = static_cast<int>(positions.size());
  double gamma_rad = 2 * kPi * gamma_over_2pi * gamma_scale;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      b(i, j) = coupling_b(positions[i], positions[j], gamma_rad, pc);
      b(j, i) = b(i, j);
    }
  }
  return CouplingTable(b);
}

double sample_offset(double fwhm_hz, std::uint64_t seed) {
  if (fwhm_hz < 0) throw std::invalid_argument("offset_fwhm must be >= 0");
  if (fwhm_hz == 0) return 0.0;
  double sigma = fwhm_hz / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  SplitMix64 rng(mix_seed(seed, 2));
  return sigma * rng.gaussian();
}

double auto_radius(const LatticeSpec& lat, const DisorderConfig& cfg) {
  double target = 4.0 * cfg.n_spins;
  double r;
  if (!lat.sites.empty()) {
    r = 0;
    for (const auto& s : lat.sites) r = std::max(r, (s - lat.sites.front()).norm());
    return std::max(r, 1e-12);
  }
  // Analytic estimate from the site density, then grow until the expected
  // occupied count (central site always occupied) actually reaches target.
  double density = lat.site_density();
  r = std::cbrt(3.0 * target / (4.0 * kPi * cfg.abundance * density));
  for (int iter = 0; iter < 60; ++iter) {
    auto sites = generate_sites(lat, r);
    double expected = 1.0 + cfg.abundance * static_cast<double>(sites.size() - 1);
    if (expected >= target) return r;
    r *= 1.25;
  }
  throw std::runtime_error("auto_radius did not converge");
}

Realization sample_realization(const LatticeSpec& lat, const DisorderConfig& cfg,
                               std::uint64_t seed, const PhysicalConstants& pc) {
  cfg.validate();

  SplitMix64 rot_rng(mix_seed(seed, 1));
  Eigen::Quaterniond q = random_rotation(rot_rng);
  Eigen::Matrix3d rot = q.toRotationMatrix();
  double offset = sample_offset(cfg.offset_fwhm, seed);

  double radius = cfg.radius > 0 ? cfg.radius : auto_radius(lat, cfg);
  double gamma_rad = 2 * kPi * cfg.gamma_over_2pi * cfg.gamma_scale;

  for (int attempt = 0; attempt < 6; ++attempt, radius *= 1.5) {
    auto sites = generate_sites(lat, radius);
    SplitMix64 occ_rng(mix_seed(seed, 3 + static_cast<std::uint64_t>(attempt)));
    std::vector<Eigen::Vector3d> occupied;
    occupied.push_back(rot * sites[0]);  // central spin
    for (std::size_t s = 1; s < sites.size(); ++s)
      if (occ_rng.uniform() < cfg.abundance) occupied.push_back(rot * sites[s]);
    if (static_cast<int>(occupied.size()) < cfg.n_spins) continue;

    // Rank the candidates around the central spin.
    struct Cand {
      double key;
      std::size_t idx;
    };
    std::vector<Cand> cands;
    cands.reserve(occupied.size() - 1);
    for (std::size_t s = 1; s < occupied.size(); ++s) {
      double key = cfg.selection == SpinSelection::StrongestCoupling
                       ? -std::fabs(coupling_b(occupied[0], occupied[s], gamma_rad, pc))
                       : occupied[s].norm();
      cands.push_back({key, s});
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      return a.key != b.key ? a.key < b.key : a.idx < b.idx;
    });

    Realization real;
    real.positions.push_back(occupied[0]);
    for (int k = 0; k < cfg.n_spins - 1; ++k) real.positions.push_back(occupied[cands[k].idx]);
    real.offset_hz = offset;
    real.couplings = coupling_constants(real.positions, cfg.gamma_over_2pi, cfg.gamma_scale, pc);
    real.seed = seed;
    real.occupied_sites = static_cast<int>(occupied.size());
    real.radius_used = radius;
    return real;
  }
  throw std::runtime_error("sample_realization: could not occupy enough sites");
}

}  // namespace dipsim
