#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dipsim/aht.hpp"
#include "dipsim/config.hpp"
#include "dipsim/engine.hpp"
#include "dipsim/lattice.hpp"
#include "dipsim/observables.hpp"
#include "dipsim/rng.hpp"
#include "dipsim/sequence.hpp"
#include "dipsim/spinops.hpp"

namespace py = pybind11;
using namespace dipsim;

namespace {

Detection det_from(const std::string& name) { return detection_from_name(name); }

}  // namespace

PYBIND11_MODULE(_dipsim, m) {
  m.doc() = "dipolar-coupled spin-1/2 ensembles under multiple-pulse echo sequences";

  py::class_<SpinAxis>(m, "SpinAxis")
      .def_static("x", &SpinAxis::x)
      .def_static("y", &SpinAxis::y)
      .def_static("z", &SpinAxis::z)
      .def_static("minus_x", &SpinAxis::minus_x)
      .def_static("minus_y", &SpinAxis::minus_y)
      .def_static("transverse", &SpinAxis::transverse, py::arg("phi"))
      .def_static("from_name", &SpinAxis::from_name, py::arg("name"))
      .def("name", &SpinAxis::name)
      .def("__repr__", [](const SpinAxis& a) { return "SpinAxis(" + a.name() + ")"; });

  py::class_<CouplingTable>(m, "CouplingTable")
      .def(py::init<Eigen::MatrixXd>(), py::arg("b_hz"))
      .def_static("zeros", &CouplingTable::zeros, py::arg("n_spins"))
      .def_readwrite("b", &CouplingTable::b)
      .def("n_spins", &CouplingTable::n_spins);

  m.def("dim_for", &dim_for, py::arg("n_spins"));
  m.def("single_spin_op", &single_spin_op, py::arg("n_spins"), py::arg("spin"), py::arg("axis"));
  m.def("collective_op", &collective_op, py::arg("n_spins"), py::arg("axis"));
  m.def("dipolar_hamiltonian", &dipolar_hamiltonian, py::arg("b"));
  m.def("ising_hamiltonian", &ising_hamiltonian, py::arg("b"));
  m.def("free_hamiltonian", &free_hamiltonian, py::arg("b"), py::arg("offset_hz"));
  m.def("pulse_hamiltonian", &pulse_hamiltonian, py::arg("h0"), py::arg("axis"),
        py::arg("f1_hz"));
  m.def("propagator", &propagator, py::arg("h"), py::arg("t"));
  m.def("delta_pulse", &delta_pulse, py::arg("n_spins"), py::arg("angle"), py::arg("axis"));
  m.def("unitarity_defect", &unitarity_defect, py::arg("u"));
  m.def(
      "rotated_dipolar_ops",
      [](const CouplingTable& b) {
        RotatedDipolarOps ops = rotated_dipolar_ops(b);
        return py::make_tuple(ops.hyy, ops.ha, ops.hs);
      },
      py::arg("b"), "returns (hyy, ha, hs)");

  py::class_<LatticeSpec>(m, "LatticeSpec")
      .def_static("diamond", &LatticeSpec::diamond, py::arg("a") = 5.431e-10)
      .def_static("fcc", &LatticeSpec::fcc, py::arg("a"))
      .def_static("custom_sites", &LatticeSpec::custom_sites, py::arg("sites"))
      .def_readonly("name", &LatticeSpec::name)
      .def("site_density", &LatticeSpec::site_density);
  py::class_<PhysicalConstants>(m, "PhysicalConstants")
      .def(py::init<>())
      .def_readwrite("mu0_over_4pi", &PhysicalConstants::mu0_over_4pi)
      .def_readwrite("hbar", &PhysicalConstants::hbar);

  m.def("generate_sites", &generate_sites, py::arg("lattice"), py::arg("radius"));
  m.def("coupling_b", &coupling_b, py::arg("ri"), py::arg("rj"), py::arg("gamma_rad"),
        py::arg("constants") = PhysicalConstants{});
  m.def("coupling_constants", &coupling_constants, py::arg("positions"),
        py::arg("gamma_over_2pi"), py::arg("gamma_scale") = 1.0,
        py::arg("constants") = PhysicalConstants{});

  py::enum_<SpinSelection>(m, "SpinSelection")
      .value("strongest", SpinSelection::StrongestCoupling)
      .value("nearest", SpinSelection::NearestDistance);

  py::class_<DisorderConfig>(m, "DisorderConfig")
      .def(py::init<>())
      .def_readwrite("n_spins", &DisorderConfig::n_spins)
      .def_readwrite("abundance", &DisorderConfig::abundance)
      .def_readwrite("gamma_over_2pi", &DisorderConfig::gamma_over_2pi)
      .def_readwrite("gamma_scale", &DisorderConfig::gamma_scale)
      .def_readwrite("offset_fwhm", &DisorderConfig::offset_fwhm)
      .def_readwrite("radius", &DisorderConfig::radius)
      .def_readwrite("selection", &DisorderConfig::selection);

  py::class_<Realization>(m, "Realization")
      .def_readonly("positions", &Realization::positions)
      .def_readonly("offset_hz", &Realization::offset_hz)
      .def_readonly("couplings", &Realization::couplings)
      .def_readonly("seed", &Realization::seed)
      .def_readonly("occupied_sites", &Realization::occupied_sites)
      .def_readonly("radius_used", &Realization::radius_used);
  m.def("sample_realization", &sample_realization, py::arg("lattice"), py::arg("disorder"),
        py::arg("seed"), py::arg("constants") = PhysicalConstants{});
  m.def("mix_seed", &mix_seed, py::arg("seed"), py::arg("stream"));

  py::class_<Sequence>(m, "Sequence")
      .def_readwrite("repeats", &Sequence::repeats)
      .def("markers_per_cycle", &Sequence::markers_per_cycle)
      .def("pulses_per_cycle", &Sequence::pulses_per_cycle)
      .def("__str__", [](const Sequence& s) { return render_sequence(s); });
  m.def("hahn", &hahn, py::arg("tau"));
  m.def("cp", &cp, py::arg("tau"), py::arg("n_echoes"));
  m.def("apcp", &apcp, py::arg("tau"), py::arg("n_echoes"));
  m.def("cpmg", &cpmg, py::arg("tau"), py::arg("n_echoes"));
  m.def("apcpmg", &apcpmg, py::arg("tau"), py::arg("n_echoes"));
  m.def("ostroff_waugh", &ostroff_waugh, py::arg("tau"), py::arg("n_blocks"));
  m.def("with_bb1", &with_bb1, py::arg("sequence"));
  m.def("parse_sequence", &parse_sequence, py::arg("text"));
  m.def("render_sequence", &render_sequence, py::arg("sequence"));

  py::class_<ModelSpec>(m, "ModelSpec")
      .def(py::init([](const std::string& name, double omega1) {
             return ModelSpec::from_name(name, omega1);
           }),
           py::arg("name"), py::arg("omega1_over_2pi") = 0.0)
      .def_readonly("omega1_over_2pi", &ModelSpec::omega1_over_2pi)
      .def("name", &ModelSpec::name)
      .def("__repr__", [](const ModelSpec& s) { return "ModelSpec(" + s.name() + ")"; });

  py::class_<EchoTrain>(m, "EchoTrain")
      .def_readonly("echo_index", &EchoTrain::echo_index)
      .def_readonly("time_s", &EchoTrain::time_s)
      .def_readonly("amp", &EchoTrain::amp)
      .def_readonly("magnitude", &EchoTrain::magnitude);

  py::class_<RunStats>(m, "RunStats")
      .def_readonly("eigendecompositions", &RunStats::eigendecompositions)
      .def_readonly("cached_propagators", &RunStats::cached_propagators)
      .def_readonly("max_unitarity_defect", &RunStats::max_unitarity_defect)
      .def_readonly("trace_drift", &RunStats::trace_drift)
      .def_readonly("purity_drift", &RunStats::purity_drift);

  py::class_<Snapshot>(m, "Snapshot")
      .def_readonly("echo_index", &Snapshot::echo_index)
      .def_readonly("time_s", &Snapshot::time_s)
      .def_readonly("pulses_applied", &Snapshot::pulses_applied)
      .def_readonly("rho", &Snapshot::rho);

  py::class_<RunResult>(m, "RunResult")
      .def_readonly("train", &RunResult::train)
      .def_readonly("stats", &RunResult::stats)
      .def_readonly("snapshots", &RunResult::snapshots);

  m.def(
      "run_dr",
      [](const Realization& real, const Sequence& seq, const ModelSpec& model,
         const std::string& detection, const std::vector<int>& snapshot_echoes) {
        return run_dr(real, seq, model, det_from(detection), snapshot_echoes);
      },
      py::arg("realization"), py::arg("sequence"), py::arg("model"),
      py::arg("detection") = "total", py::arg("snapshot_echoes") = std::vector<int>{});
  m.def(
      "run_with_hamiltonian",
      [](const Eigen::MatrixXcd& h0, int n_spins, const Sequence& seq, const ModelSpec& model,
         const std::string& detection, const std::vector<int>& snapshot_echoes) {
        return run_with_hamiltonian(h0, n_spins, seq, model, det_from(detection),
                                    snapshot_echoes);
      },
      py::arg("h0"), py::arg("n_spins"), py::arg("sequence"), py::arg("model"),
      py::arg("detection") = "total", py::arg("snapshot_echoes") = std::vector<int>{});
  m.def(
      "echo_times",
      [](const Sequence& seq, const ModelSpec& model) { return echo_times(seq, model); },
      py::arg("sequence"), py::arg("model"));

  py::class_<EnsembleResult>(m, "EnsembleResult")
      .def_readonly("echo_index", &EnsembleResult::echo_index)
      .def_readonly("time_s", &EnsembleResult::time_s)
      .def_readonly("mean", &EnsembleResult::mean)
      .def_readonly("sem", &EnsembleResult::sem)
      .def_readonly("magnitude_mean", &EnsembleResult::magnitude_mean)
      .def_readonly("per_dr", &EnsembleResult::per_dr)
      .def_readonly("stats", &EnsembleResult::stats)
      .def_readonly("n_dr", &EnsembleResult::n_dr);
  m.def(
      "run_ensemble",
      [](const LatticeSpec& lat, const DisorderConfig& dis, const Sequence& seq,
         const ModelSpec& model, int n_dr, std::uint64_t seed, const std::string& detection,
         int workers) {
        return run_ensemble(lat, dis, seq, model, n_dr, seed, det_from(detection), workers);
      },
      py::arg("lattice"), py::arg("disorder"), py::arg("sequence"), py::arg("model"),
      py::arg("n_dr"), py::arg("seed"), py::arg("detection") = "total", py::arg("workers") = 0,
      py::call_guard<py::gil_scoped_release>());
  m.def("analytic_ising_echo",
        [](const CouplingTable& b, const std::vector<double>& times,
           const std::string& detection) {
          return analytic_ising_echo(b, times, det_from(detection));
        },
        py::arg("b"), py::arg("times"), py::arg("detection") = "total");

  m.def(
      "magnus_terms",
      [](const Sequence& seq, const Eigen::MatrixXcd& h0, int n_spins, double omega1_over_2pi) {
        TogglingFrame frame = toggling_frame(seq, h0, n_spins, omega1_over_2pi);
        return py::make_tuple(magnus0(frame), magnus1(frame), frame.t_c, frame.span);
      },
      py::arg("sequence"), py::arg("h0"), py::arg("n_spins"), py::arg("omega1_over_2pi"),
      "returns (hbar0, hbar1, t_c, span)");
  m.def(
      "cpmg_closed_form",
      [](const CouplingTable& b, double offset_hz, double tau, double t_p) {
        CpmgClosedForm cf = cpmg_closed_form(b, offset_hz, tau, t_p);
        return py::make_tuple(cf.hbar0, cf.hbar1, cf.t_c);
      },
      py::arg("b"), py::arg("offset_hz"), py::arg("tau"), py::arg("t_p"),
      "returns (hbar0, hbar1, t_c)");
  m.def("cycle_defect", &cycle_defect, py::arg("h0"), py::arg("n_spins"), py::arg("sequence"),
        py::arg("omega1_over_2pi"), py::arg("order"));

  m.def(
      "coherence_orders",
      [](const Eigen::MatrixXcd& rho, int n_spins) {
        CoherenceSpectrum s = coherence_orders(rho, n_spins);
        return py::make_tuple(s.order, s.amplitude);
      },
      py::arg("rho"), py::arg("n_spins"), "returns (orders, amplitudes)");
  m.def("mz_sorted_basis", &mz_sorted_basis, py::arg("n_spins"));
  m.def("write_snapshot_ppm", &write_snapshot_ppm, py::arg("path"), py::arg("rho"),
        py::arg("n_spins"), py::arg("threshold"));
  m.def("write_snapshot_json", &write_snapshot_json, py::arg("path"), py::arg("rho"),
        py::arg("n_spins"), py::arg("echo_index"), py::arg("time_s"), py::arg("pulses_applied"),
        py::arg("n_averaged") = 1);

  m.attr("__version__") = "0.1.0";
}
