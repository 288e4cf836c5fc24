#include "dipsim/aht.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include <Eigen/SVD>

namespace dipsim {

namespace {

constexpr double kPi = std::numbers::pi;
const Complex kI(0.0, 1.0);

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
struct GaussLegendre {
  std::vector<double> x, w;
};

const GaussLegendre& gauss_legendre(int n) {
  static std::map<int, GaussLegendre> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  GaussLegendre gl;
  gl.x.resize(n);
  gl.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      // P_n(x) and P_n'(x) via the three-term recurrence.
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = n * (x * p1 - p0) / (x * x - 1.0);
    gl.x[i] = x;
    gl.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return cache.emplace(n, std::move(gl)).first->second;
}

// Eigenbasis of I_phi,T built analytically: the 2x2 eigenvectors of i_phi are
// (1, +-e^{i phi})/sqrt(2) with eigenvalues +-1/2, and the collective operator
// is their Kronecker power. Eigenvalue of basis index a: (n - 2 popcount)/2.
Operator phi_eigvecs(int n, double phase_deg) {
  double phi = phase_deg * kPi / 180.0;
  Eigen::Matrix2cd v;
  double s = 1.0 / std::sqrt(2.0);
  v << s, s, s * std::exp(kI * phi), -s * std::exp(kI * phi);
  return kron_power(v, n);
}

double phi_eigval(int n, int a) {
  return 0.5 * (n - 2 * __builtin_popcount(static_cast<unsigned>(a)));
}

// Integral of e^{-i delta w1 s} over s in [0, T] (w1 in rad/s).
Complex phase_integral(double delta, double w1, double t) {
  double x = delta * w1;
  if (x == 0.0) return Complex(t, 0.0);
  return (1.0 - std::exp(-kI * (x * t))) / (kI * x);
}

// Integral over one pulse interval of e^{-i theta I} h0 e^{+i theta I} dt,
// theta = w1 t, t in [0, T]; exact via the eigenphase structure above.
Operator pulse_interval_integral(const Operator& h0, int n, double phase_deg, double w1,
                                 double t) {
  Operator v = phi_eigvecs(n, phase_deg);
  Operator hh = v.adjoint() * h0 * v;
  int dim = static_cast<int>(h0.rows());
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b)
      hh(a, b) *= phase_integral(phi_eigval(n, a) - phi_eigval(n, b), w1, t);
  return v * hh * v.adjoint();
}

Operator commutator(const Operator& a, const Operator& b) { return a * b - b * a; }

}  // namespace

TogglingFrame toggling_frame(const Sequence& seq, const Operator& h0, int n_spins,
                             double omega1_over_2pi) {
  seq.validate();
  int dim = dim_for(n_spins);
  if (h0.rows() != dim || h0.cols() != dim)
    throw std::invalid_argument("h0 dimension does not match n_spins");
  if (omega1_over_2pi < 0) throw std::invalid_argument("omega1_over_2pi must be >= 0");

  NetRotation single = net_rotation(seq.cycle);
  NetRotation acc = single;
  int span = 1;
  while (span < 4 && !acc.cyclic()) {
    acc.u = acc.u * acc.u;
    span *= 2;
  }
  if (!acc.cyclic())
    throw std::invalid_argument(
        "rf rotation of the cycle is not cyclic within 4 repetitions (net rotation " +
        single.describe() + ")");

  TogglingFrame frame;
  frame.span = span;
  frame.omega1_over_2pi = omega1_over_2pi;
  frame.n_spins = n_spins;
  frame.h0 = &h0;

  Operator u0 = Operator::Identity(dim, dim);
  double w1 = 2 * kPi * omega1_over_2pi;
  for (int rep = 0; rep < span; ++rep) {
    for (const auto& e : seq.cycle) {
      if (const auto* d = std::get_if<DelayEvent>(&e)) {
        if (d->duration <= 0) continue;
        TogglingInterval iv;
        iv.duration = d->duration;
        iv.u0 = u0;
        iv.h_const = u0.adjoint() * h0 * u0;
        frame.t_c += d->duration;
        frame.intervals.push_back(std::move(iv));
      } else if (const auto* p = std::get_if<PulseEvent>(&e)) {
        ++frame.pulses_per_span;
        bool ideal = p->always_delta || w1 <= 0;
        if (!ideal) {
          TogglingInterval iv;
          iv.is_pulse = true;
          iv.duration = p->angle_rad() / w1;
          iv.phase_deg = p->phase_deg;
          iv.angle_deg = p->angle_deg;
          iv.u0 = u0;
          frame.t_c += iv.duration;
          frame.intervals.push_back(std::move(iv));
        }
        u0 = delta_pulse(n_spins, p->angle_rad(), p->axis()) * u0;
      } else {
        ++frame.markers_per_span;
      }
    }
  }
  frame.u_rf_end = std::move(u0);
  if (!(frame.t_c > 0)) throw std::invalid_argument("cycle has zero duration");
  return frame;
}

Operator magnus0(const TogglingFrame& frame) {
  int dim = dim_for(frame.n_spins);
  double w1 = 2 * kPi * frame.omega1_over_2pi;
  Operator acc = Operator::Zero(dim, dim);
  for (const auto& iv : frame.intervals) {
    if (!iv.is_pulse) {
      acc += iv.duration * iv.h_const;
    } else {
      Operator j = pulse_interval_integral(*frame.h0, frame.n_spins, iv.phase_deg, w1,
                                           iv.duration);
      acc += iv.u0.adjoint() * j * iv.u0;
    }
  }
  return acc / frame.t_c;
}

namespace {

// Ordered double integral inside one pulse interval:
//   Int_0^T dt2 Int_0^t2 dt1 [B(t2), B(t1)],  B(t) = e^{-i w1 t I} h0 e^{+i w1 t I}
// by nested Gauss-Legendre with n nodes at each level.
Operator pulse_ordered_double(const Operator& h0, int n_spins, double phase_deg, double w1,
                              double t, int nodes) {
  const auto& gl = gauss_legendre(nodes);
  int dim = static_cast<int>(h0.rows());
  SpinAxis axis = SpinAxis::transverse(phase_deg * kPi / 180.0);
  auto toggled = [&](double s) {
    Operator u = delta_pulse(n_spins, w1 * s, axis);
    return Operator(u.adjoint() * h0 * u);
  };
  Operator acc = Operator::Zero(dim, dim);
  for (int i = 0; i < nodes; ++i) {
    double t2 = 0.5 * t * (gl.x[i] + 1.0);
    double w2 = 0.5 * t * gl.w[i];
    Operator b2 = toggled(t2);
    Operator inner = Operator::Zero(dim, dim);
    for (int j = 0; j < nodes; ++j) {
      double t1 = 0.5 * t2 * (gl.x[j] + 1.0);
      double w1j = 0.5 * t2 * gl.w[j];
      inner += w1j * toggled(t1);
    }
    acc += w2 * commutator(b2, inner);
  }
  return acc;
}

}  // namespace

Operator magnus1(const TogglingFrame& frame) {
  int dim = dim_for(frame.n_spins);
  double w1 = 2 * kPi * frame.omega1_over_2pi;

  // Single-interval integrals (exact), in the common toggled frame.
  std::vector<Operator> m;
  m.reserve(frame.intervals.size());
  for (const auto& iv : frame.intervals) {
    if (!iv.is_pulse) {
      m.push_back(iv.duration * iv.h_const);
    } else {
      Operator j =
          pulse_interval_integral(*frame.h0, frame.n_spins, iv.phase_deg, w1, iv.duration);
      m.push_back(Operator(iv.u0.adjoint() * j * iv.u0));
    }
  }

  Operator acc = Operator::Zero(dim, dim);
  // Cross terms: later interval i, earlier interval j; the ordered double
  // integral factorizes into [M_i, M_j] over the full rectangle.
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) acc += commutator(m[i], m[j]);

  // Within-interval terms: zero for delays (constant H commutes with itself),
  // adaptive quadrature for pulses.
  for (const auto& iv : frame.intervals) {
    if (!iv.is_pulse) continue;
    double scale = frame.h0->cwiseAbs().maxCoeff() * iv.duration;
    Operator prev = pulse_ordered_double(*frame.h0, frame.n_spins, iv.phase_deg, w1,
                                         iv.duration, 8);
    bool converged = false;
    for (int nodes = 16; nodes <= 128; nodes *= 2) {
      Operator cur = pulse_ordered_double(*frame.h0, frame.n_spins, iv.phase_deg, w1,
                                          iv.duration, nodes);
      double diff = (cur - prev).norm();
      double ref = std::max(cur.norm(), 1e-12 * scale * scale);
      prev = std::move(cur);
      if (diff <= 1e-10 * ref) {
        converged = true;
        break;
      }
    }
    if (!converged) throw std::runtime_error("magnus1: pulse quadrature did not converge");
    acc += iv.u0.adjoint() * prev * iv.u0;
  }

  return (-kI / (2.0 * frame.t_c)) * acc;
}

CpmgClosedForm cpmg_closed_form(const CouplingTable& b, double offset_hz, double tau,
                                double t_p) {
  if (!(tau > 0) || !(t_p >= 0)) throw std::invalid_argument("tau > 0 and t_p >= 0 required");
  int n = b.n_spins();
  RotatedDipolarOps ops = rotated_dipolar_ops(b);
  Operator hzz = dipolar_hamiltonian(b);
  Operator ix = collective_op(n, SpinAxis::x());
  Operator iz = collective_op(n, SpinAxis::z());
  double w = 2 * kPi * offset_hz;

  CpmgClosedForm out;
  out.t_c = 4 * tau + 2 * t_p;
  out.hbar0 = (4 * tau * hzz - t_p * ops.hyy) / out.t_c;
  Operator inner = t_p * commutator(ops.ha, Operator(ops.hs + ops.hyy)) +
                   (8 * tau + 2 * t_p) * commutator(Operator(w * ix), Operator(w * iz + ops.hyy));
  out.hbar1 = (-kI / (2.0 * out.t_c)) * (t_p / kPi) * inner;
  return out;
}

double cycle_defect(const Operator& h0, int n_spins, const Sequence& seq,
                    double omega1_over_2pi, int order) {
  if (order != 0 && order != 1) throw std::invalid_argument("order must be 0 or 1");
  TogglingFrame frame = toggling_frame(seq, h0, n_spins, omega1_over_2pi);
  Operator hbar = magnus0(frame);
  if (order >= 1) hbar += magnus1(frame);
  Operator u_aht = frame.u_rf_end * propagator(hbar, frame.t_c);

  int dim = dim_for(n_spins);
  double w1 = 2 * kPi * omega1_over_2pi;
  Operator u_exact = Operator::Identity(dim, dim);
  std::map<double, Operator> free_cache;
  for (int rep = 0; rep < frame.span; ++rep) {
    for (const auto& e : seq.cycle) {
      if (const auto* d = std::get_if<DelayEvent>(&e)) {
        if (d->duration <= 0) continue;
        auto it = free_cache.find(d->duration);
        if (it == free_cache.end())
          it = free_cache.emplace(d->duration, propagator(h0, d->duration)).first;
        u_exact = it->second * u_exact;
      } else if (const auto* p = std::get_if<PulseEvent>(&e)) {
        if (p->always_delta || w1 <= 0) {
          u_exact = delta_pulse(n_spins, p->angle_rad(), p->axis()) * u_exact;
        } else {
          double t_p = p->angle_rad() / w1;
          u_exact =
              propagator(pulse_hamiltonian(h0, p->axis(), omega1_over_2pi), t_p) * u_exact;
        }
      }
    }
  }

  Eigen::JacobiSVD<Operator> svd(u_exact - u_aht);
  return svd.singularValues()(0);
}

}  // namespace dipsim
