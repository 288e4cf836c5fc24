#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dipsim/lattice.hpp"
#include "dipsim/sequence.hpp"
#include "dipsim/spinops.hpp"

namespace dipsim {

// How pulses are realized:
//   Delta         ideal zero-width rotations; time does not advance
//   ExactFinite   full propagator of (-w1 I_phi,T + H0) over t_p = angle/w1
//   InterruptedH0 ideal rotation, but the clock still advances by t_p
//   AvgH0         stroboscopic evolution under the zeroth-order average
//                 Hamiltonian of the cycle, sampled at cycle boundaries
//   AvgH0H1       same with the first-order term included
struct ModelSpec {
  enum class Type { Delta, ExactFinite, InterruptedH0, AvgH0, AvgH0H1 };
  Type type = Type::Delta;
  double omega1_over_2pi = 0.0;  // Hz; required for every type except Delta

  bool stroboscopic() const { return type == Type::AvgH0 || type == Type::AvgH0H1; }
  bool finite_width() const { return type != Type::Delta; }
  void validate() const;

  std::string name() const;
  static ModelSpec from_name(const std::string& name, double omega1_over_2pi);
};

enum class Detection { Total, Central };
std::string detection_name(Detection d);
Detection detection_from_name(const std::string& name);

// Signals at the echo markers. Amplitudes are normalized so the state right
// after the 90X prologue reads +1; `amp` is the transverse component along
// each marker's expected axis, `magnitude` the full transverse magnitude.
struct EchoTrain {
  std::vector<int> echo_index;  // 1-based, counts markers from the start
  std::vector<double> time_s;
  std::vector<double> amp;
  std::vector<double> magnitude;
};

struct RunStats {
  int eigendecompositions = 0;
  int cached_propagators = 0;         // distinct cycle/prologue propagators built
  double max_unitarity_defect = 0.0;  // worst |U^dag U - 1| over cached propagators
  double trace_drift = 0.0;           // max |tr rho| over echoes (initial state traceless)
  double purity_drift = 0.0;          // max relative |tr rho^2 - tr rho0^2|
};

struct Snapshot {
  int echo_index = 0;
  double time_s = 0.0;
  int pulses_applied = 0;
  Operator rho;  // unnormalized deviation density matrix
};

struct RunResult {
  EchoTrain train;
  RunStats stats;
  std::vector<Snapshot> snapshots;
};

// Evolve one realization through the sequence. `snapshot_echoes` lists echo
// indices at which to keep a copy of the density matrix.
RunResult run_dr(const Realization& real, const Sequence& seq, const ModelSpec& model,
                 Detection det = Detection::Total,
                 const std::vector<int>& snapshot_echoes = {});

// Same but with an explicit free Hamiltonian (rad/s).
RunResult run_with_hamiltonian(const Operator& h0, int n_spins, const Sequence& seq,
                               const ModelSpec& model, Detection det = Detection::Total,
                               const std::vector<int>& snapshot_echoes = {});

// Echo-marker times under the model's clock without evolving anything.
std::vector<double> echo_times(const Sequence& seq, const ModelSpec& model);

struct EnsembleResult {
  std::vector<int> echo_index;
  std::vector<double> time_s;
  std::vector<double> mean;       // disorder average of EchoTrain::amp
  std::vector<double> sem;        // standard error of that mean
  std::vector<double> magnitude_mean;
  std::vector<EchoTrain> per_dr;  // one train per realization, in seed order
  RunStats stats;                 // worst case over realizations
  int n_dr = 0;
};

// Disorder ensemble: realization k uses seed mix_seed(master_seed, k); the
// reduction is over ascending k regardless of worker count.
EnsembleResult run_ensemble(const LatticeSpec& lat, const DisorderConfig& cfg,
                            const Sequence& seq, const ModelSpec& model, int n_dr,
                            std::uint64_t master_seed, Detection det = Detection::Total,
                            int workers = 0);

// Closed-form echo amplitude when flip-flop terms are dropped (pure Ising
// coupling, ideal pulses): S_i(t) = prod_j cos(2 pi B_ij t), averaged over
// spins for Detection::Total.
std::vector<double> analytic_ising_echo(const CouplingTable& b, const std::vector<double>& times,
                                        Detection det = Detection::Total);

}  // namespace dipsim
