#pragma once

#include "dipsim/coupling_table.hpp"
#include "dipsim/sequence.hpp"
#include "dipsim/spinops.hpp"

namespace dipsim {

// Toggling-frame decomposition of one rf cycle: the cycle (repeated until the
// net rf rotation is a multiple of the identity, up to 4 repetitions) is cut
// into constant-H intervals (delays) and pulse intervals. All Hamiltonians
// in rad/s.
struct TogglingInterval {
  bool is_pulse = false;
  double duration = 0.0;
  // Pulses: phase/angle and the rf rotation accumulated before the interval.
  double phase_deg = 0.0;
  double angle_deg = 0.0;
  Operator u0;       // rf propagator at interval start (full dimension)
  Operator h_const;  // delays: the constant toggled Hamiltonian U0^dag H0 U0
};

struct TogglingFrame {
  std::vector<TogglingInterval> intervals;
  double t_c = 0.0;        // duration of the (extended) cycle incl. pulse widths
  int span = 1;            // cycle repetitions needed for rf cyclicity (1, 2 or 4)
  int markers_per_span = 0;
  int pulses_per_span = 0;
  Operator u_rf_end;       // full-dimension rf propagator after the extended cycle
  double omega1_over_2pi = 0.0;
  int n_spins = 0;
  const Operator* h0 = nullptr;  // borrowed; valid while the caller's h0 lives
};

// Build the toggling frame of seq.cycle for rf strength omega1/2pi (Hz).
// omega1_over_2pi == 0 treats pulses as ideal zero-width rotations.
// Throws if the net rf rotation is not cyclic within 1, 2 or 4 repetitions.
TogglingFrame toggling_frame(const Sequence& seq, const Operator& h0, int n_spins,
                             double omega1_over_2pi);

// Magnus expansion terms of the average Hamiltonian over the frame's cycle:
//   hbar0 = (1/t_c) Int H~(t) dt
//   hbar1 = (-i / 2 t_c) Int dt2 Int_0^t2 dt1 [H~(t2), H~(t1)]
// Delay intervals and every single-interval integral are evaluated in closed
// form; only the ordered double integral inside one pulse interval uses
// (adaptive Gauss-Legendre) quadrature.
Operator magnus0(const TogglingFrame& frame);
Operator magnus1(const TogglingFrame& frame);

// Closed forms for the canonical two-pulse cycle with pulses about +/-Y
// (delay tau, pi pulse, 2 tau, pi pulse, tau; cycle time 4 tau + 2 t_p):
//   hbar0 = (4 tau H_zz - t_p H_yy) / t_c
//   hbar1 = (-i/2 t_c)(t_p/pi) { t_p [H_A, H_S + H_yy]
//           + (8 tau + 2 t_p) [w I_xT, w I_zT + H_yy] },  w = 2 pi offset
struct CpmgClosedForm {
  Operator hbar0, hbar1;
  double t_c = 0.0;
};
CpmgClosedForm cpmg_closed_form(const CouplingTable& b, double offset_hz, double tau,
                                double t_p);

// Spectral-norm distance between the exact cycle propagator and
// U_rf(t_c) exp(-i hbar t_c) with hbar truncated after `order` (0 or 1).
double cycle_defect(const Operator& h0, int n_spins, const Sequence& seq,
                    double omega1_over_2pi, int order);

}  // namespace dipsim
