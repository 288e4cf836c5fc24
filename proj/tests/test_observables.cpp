#include <doctest/doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "dipsim/observables.hpp"
#include "dipsim/rng.hpp"
#include "test_util.hpp"

using namespace dipsim;
namespace tu = testutil;
namespace fs = std::filesystem;

namespace {
fs::path temp_file(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "dipsim_obs_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}
}  // namespace

TEST_CASE("basis quantum numbers and sort order") {
  CHECK(basis_mz(3, 0) == 1.5);
  CHECK(basis_mz(3, 5) == -0.5);  // 101b: two spins down
  CHECK(basis_mz(3, 7) == -1.5);
  CHECK(basis_mz(2, 1) == 0.0);

  CHECK(mz_sorted_basis(2) == std::vector<int>{0, 1, 2, 3});
  CHECK(mz_sorted_basis(3) == std::vector<int>{0, 1, 2, 4, 3, 5, 6, 7});
}

TEST_CASE("coherence spectrum of canonical operators") {
  int n = 2;
  CoherenceSpectrum sx = coherence_orders(collective_op(n, SpinAxis::x()), n);
  REQUIRE(sx.order == std::vector<int>{-2, -1, 0, 1, 2});
  CHECK(std::abs(sx.amplitude[1] - 1.0) < 1e-14);  // q = -1
  CHECK(std::abs(sx.amplitude[3] - 1.0) < 1e-14);  // q = +1
  CHECK(sx.amplitude[0] < 1e-14);
  CHECK(sx.amplitude[2] < 1e-14);
  CHECK(sx.amplitude[4] < 1e-14);

  CoherenceSpectrum sz = coherence_orders(collective_op(n, SpinAxis::z()), n);
  CHECK(std::abs(sz.amplitude[2] - std::sqrt(2.0)) < 1e-14);
  CHECK(sz.amplitude[1] < 1e-14);
  CHECK(sz.amplitude[3] < 1e-14);

  // Pure double-quantum element |uu><dd|.
  Operator dq = Operator::Zero(4, 4);
  dq(0, 3) = 1.0;
  CoherenceSpectrum s2 = coherence_orders(dq, n);
  CHECK(std::abs(s2.amplitude[4] - 1.0) < 1e-14);  // q = +2
  CHECK(s2.amplitude[0] < 1e-14);

  // Parseval: amplitudes tile the Frobenius norm.
  dipsim::SplitMix64 rng(303);
  tu::Mat r = tu::random_hermitian(rng, 8, 1.0);
  CoherenceSpectrum sr = coherence_orders(r, 3);
  double sum2 = 0;
  for (double a : sr.amplitude) sum2 += a * a;
  CHECK(std::abs(sum2 - r.squaredNorm()) < 1e-10);

  CHECK_THROWS_AS(coherence_orders(Operator::Zero(4, 4), 3), std::invalid_argument);
}

TEST_CASE("ppm snapshot: header, layout and palette") {
  int n = 2;
  Operator rho = Operator::Zero(4, 4);
  rho(0, 0) = 1.0;                 // phase 0 at full scale -> white
  rho(1, 1) = Complex(0, 0.5);     // +pi/2 at half scale -> half red
  rho(2, 2) = Complex(0, -0.5);    // -pi/2 at half scale -> half blue
  rho(3, 3) = 0.01;                // below threshold -> black

  fs::path p = temp_file("palette.ppm");
  write_snapshot_ppm(p.string(), rho, n, 0.02);
  std::string data = slurp(p);
  const std::string header = "P6\n4 4\n255\n";
  REQUIRE(data.size() == header.size() + 4 * 4 * 3);
  CHECK(data.substr(0, header.size()) == header);

  auto px = [&](int r, int c) {
    size_t at = header.size() + 3 * size_t(r * 4 + c);
    return std::array<int, 3>{(unsigned char)data[at], (unsigned char)data[at + 1],
                              (unsigned char)data[at + 2]};
  };
  CHECK(px(0, 0) == std::array<int, 3>{255, 255, 255});
  CHECK(px(1, 1) == std::array<int, 3>{128, 0, 0});
  CHECK(px(2, 2) == std::array<int, 3>{0, 0, 128});
  CHECK(px(3, 3) == std::array<int, 3>{0, 0, 0});
  CHECK(px(0, 1) == std::array<int, 3>{0, 0, 0});

  // Rows/columns follow the mz sort: for n=3 a lone entry at computational
  // index (3,3) lands at sorted position (4,4).
  Operator rho3 = Operator::Zero(8, 8);
  rho3(3, 3) = 1.0;
  fs::path p3 = temp_file("perm.ppm");
  write_snapshot_ppm(p3.string(), rho3, 3, 0.02);
  std::string d3 = slurp(p3);
  const std::string h3 = "P6\n8 8\n255\n";
  auto px3 = [&](int r, int c) {
    size_t at = h3.size() + 3 * size_t(r * 8 + c);
    return std::array<int, 3>{(unsigned char)d3[at], (unsigned char)d3[at + 1],
                              (unsigned char)d3[at + 2]};
  };
  CHECK(px3(4, 4) == std::array<int, 3>{255, 255, 255});
  CHECK(px3(3, 3) == std::array<int, 3>{0, 0, 0});

  CHECK_THROWS_AS(write_snapshot_ppm(p.string(), rho, 3, 0.02), std::invalid_argument);
  CHECK_THROWS_AS(write_snapshot_ppm(p.string(), rho, 2, 1.5), std::invalid_argument);
}

TEST_CASE("json snapshot round trip") {
  dipsim::SplitMix64 rng(307);
  tu::Mat rho = tu::random_hermitian(rng, 4, 1.0);
  fs::path p = temp_file("snap.json");
  write_snapshot_json(p.string(), rho, 2, 7, 1.25e-3, 9, 250);

  nlohmann::json j = nlohmann::json::parse(slurp(p));
  CHECK(j["n_spins"] == 2);
  CHECK(j["echo_index"] == 7);
  CHECK(j["time_s"].get<double>() == doctest::Approx(1.25e-3).epsilon(1e-15));
  CHECK(j["pulses_applied"] == 9);
  CHECK(j["n_averaged"] == 250);
  REQUIRE(j["rho_re"].size() == 4);
  REQUIRE(j["rho_im"][3].size() == 4);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      CHECK(j["rho_re"][a][b].get<double>() == doctest::Approx(rho(a, b).real()).epsilon(1e-15));
      CHECK(j["rho_im"][a][b].get<double>() == doctest::Approx(rho(a, b).imag()).epsilon(1e-15));
    }

  // Defaults to a single-realization snapshot.
  fs::path p1 = temp_file("snap1.json");
  write_snapshot_json(p1.string(), rho, 2, 1, 0.0, 0);
  CHECK(nlohmann::json::parse(slurp(p1))["n_averaged"] == 1);
}
