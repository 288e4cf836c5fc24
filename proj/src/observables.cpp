#include "dipsim/observables.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace dipsim {

namespace {

constexpr double kPi = std::numbers::pi;

int popcount(int a) { return __builtin_popcount(static_cast<unsigned>(a)); }

}  // namespace

double basis_mz(int n_spins, int a) {
  dim_for(n_spins);
  return 0.5 * (n_spins - 2 * popcount(a));
}

CoherenceSpectrum coherence_orders(const Operator& rho, int n_spins) {
  int dim = dim_for(n_spins);
  if (rho.rows() != dim || rho.cols() != dim)
    throw std::invalid_argument("rho dimension does not match n_spins");
  std::vector<double> sums(2 * n_spins + 1, 0.0);
  for (int a = 0; a < dim; ++a) {
    for (int b = 0; b < dim; ++b) {
      int q = popcount(b) - popcount(a);  // M_a - M_b
      sums[q + n_spins] += std::norm(rho(a, b));
    }
  }
  CoherenceSpectrum out;
  for (int q = -n_spins; q <= n_spins; ++q) {
    out.order.push_back(q);
    out.amplitude.push_back(std::sqrt(sums[q + n_spins]));
  }
  return out;
}

std::vector<int> mz_sorted_basis(int n_spins) {
  int dim = dim_for(n_spins);
  std::vector<int> perm(dim);
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(),
                   [&](int a, int b) { return popcount(a) < popcount(b); });
  return perm;
}

void write_snapshot_ppm(const std::string& path, const Operator& rho, int n_spins,
                        double threshold) {
  int dim = dim_for(n_spins);
  if (rho.rows() != dim || rho.cols() != dim)
    throw std::invalid_argument("rho dimension does not match n_spins");
  if (!(threshold >= 0 && threshold <= 1))
    throw std::invalid_argument("threshold must be in [0, 1]");

  double max_abs = rho.cwiseAbs().maxCoeff();
  std::vector<int> perm = mz_sorted_basis(n_spins);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "P6\n" << dim << " " << dim << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(dim) * 3);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      Complex v = rho(perm[i], perm[j]);
      double a = max_abs > 0 ? std::abs(v) / max_abs : 0.0;
      double r = 0, g = 0, b = 0;
      if (a >= threshold && a > 0) {
        double ph = std::arg(v);
        double x = std::min(std::fabs(ph) / (kPi / 2), 1.0);
        if (ph >= 0) {  // toward red
          r = 1.0;
          g = 1.0 - x;
          b = 1.0 - x;
        } else {  // toward blue
          r = 1.0 - x;
          g = 1.0 - x;
          b = 1.0;
        }
        r *= a;
        g *= a;
        b *= a;
      }
      row[3 * j + 0] = static_cast<unsigned char>(std::lround(255 * r));
      row[3 * j + 1] = static_cast<unsigned char>(std::lround(255 * g));
      row[3 * j + 2] = static_cast<unsigned char>(std::lround(255 * b));
    }
    f.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
  if (!f) throw std::runtime_error("failed writing " + path);
}

void write_snapshot_json(const std::string& path, const Operator& rho, int n_spins,
                         int echo_index, double time_s, int pulses_applied,
                         int n_averaged) {
  int dim = dim_for(n_spins);
  if (rho.rows() != dim || rho.cols() != dim)
    throw std::invalid_argument("rho dimension does not match n_spins");
  nlohmann::json j;
  j["n_spins"] = n_spins;
  j["echo_index"] = echo_index;
  j["time_s"] = time_s;
  j["pulses_applied"] = pulses_applied;
  j["n_averaged"] = n_averaged;
  j["basis"] = "computational; spin 0 = most significant bit, bit 0 = spin up";
  nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
  for (int a = 0; a < dim; ++a) {
    nlohmann::json rrow = nlohmann::json::array(), irow = nlohmann::json::array();
    for (int b = 0; b < dim; ++b) {
      rrow.push_back(rho(a, b).real());
      irow.push_back(rho(a, b).imag());
    }
    re.push_back(std::move(rrow));
    im.push_back(std::move(irow));
  }
  j["rho_re"] = std::move(re);
  j["rho_im"] = std::move(im);
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << j.dump(1, '\t') << "\n";
  if (!f) throw std::runtime_error("failed writing " + path);
}

}  // namespace dipsim
