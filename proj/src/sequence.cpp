#include "dipsim/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <nlohmann/json.hpp>

namespace dipsim {

namespace {

constexpr double kPi = std::numbers::pi;
const std::complex<double> kI(0.0, 1.0);

// arccos(-1/4), the BB1 phase offset, in degrees.
double bb1_offset_deg() { return std::acos(-0.25) * 180.0 / kPi; }

double wrap_deg(double d) {
  double w = std::fmod(d, 360.0);
  if (w < 0) w += 360.0;
  return w;
}

// Shortest round-trip decimal form, without a trailing ".0".
std::string number_str(double v) {
  std::string s = nlohmann::json(v).dump();
  if (s.size() > 2 && s.compare(s.size() - 2, 2, ".0") == 0) s.resize(s.size() - 2);
  return s;
}

}  // namespace

SpinAxis PulseEvent::axis() const { return SpinAxis::transverse(phase_deg * kPi / 180.0); }
double PulseEvent::angle_rad() const { return angle_deg * kPi / 180.0; }
SpinAxis EchoMarker::axis() const {
  return SpinAxis::transverse(expected_phase_deg * kPi / 180.0);
}

int Sequence::markers_per_cycle() const {
  int n = 0;
  for (const auto& e : cycle)
    if (std::holds_alternative<EchoMarker>(e)) ++n;
  return n;
}

int Sequence::pulses_per_cycle() const {
  int n = 0;
  for (const auto& e : cycle)
    if (std::holds_alternative<PulseEvent>(e)) ++n;
  return n;
}

void Sequence::validate() const {
  auto check_events = [](const std::vector<Event>& events, bool is_cycle) {
    for (const auto& e : events) {
      if (const auto* p = std::get_if<PulseEvent>(&e)) {
        if (!(p->angle_deg > 0) || !std::isfinite(p->angle_deg))
          throw std::invalid_argument("pulse angle must be positive");
        if (!std::isfinite(p->phase_deg))
          throw std::invalid_argument("pulse phase must be finite");
      } else if (const auto* d = std::get_if<DelayEvent>(&e)) {
        if (!(d->duration >= 0) || !std::isfinite(d->duration))
          throw std::invalid_argument("delay must be >= 0");
      } else if (is_cycle) {
        const auto& m = std::get<EchoMarker>(e);
        if (!std::isfinite(m.expected_phase_deg))
          throw std::invalid_argument("echo phase must be finite");
      }
    }
  };
  check_events(prologue, false);
  check_events(cycle, true);
  if (repeats < 0) throw std::invalid_argument("repeats must be >= 0");
  for (const auto& e : prologue)
    if (std::holds_alternative<EchoMarker>(e))
      throw std::invalid_argument("echo markers are only allowed inside the cycle");
}

std::string phase_name(double phase_deg) {
  double w = wrap_deg(phase_deg);
  if (w == 0.0) return "X";
  if (w == 90.0) return "Y";
  if (w == 180.0) return "-X";
  if (w == 270.0) return "-Y";
  return number_str(phase_deg);  // degrees
}

double phase_from_name(const std::string& name) {
  std::string s = name;
  if (!s.empty() && s[0] == '+') s = s.substr(1);
  if (s == "X") return 0.0;
  if (s == "Y") return 90.0;
  if (s == "-X") return 180.0;
  if (s == "-Y") return 270.0;
  throw std::invalid_argument("unknown phase name: " + name);
}

namespace {

PulseEvent pulse(double angle_deg, double phase_deg) {
  return PulseEvent{angle_deg, phase_deg, false};
}
PulseEvent prologue_pulse(double angle_deg, double phase_deg) {
  return PulseEvent{angle_deg, phase_deg, true};
}

// Two-pulse Carr-Purcell style train: 90X prologue, cycle of two pi pulses
// with the given phases and echo expectations.
Sequence two_pulse_train(double tau, int n_echoes, double p1, double e1, double p2, double e2) {
  if (!(tau > 0)) throw std::invalid_argument("tau must be positive");
  if (n_echoes <= 0 || n_echoes % 2 != 0)
    throw std::invalid_argument("n_echoes must be positive and even");
  Sequence seq;
  seq.prologue = {prologue_pulse(90, 0)};
  seq.cycle = {DelayEvent{tau}, pulse(180, p1), DelayEvent{tau}, EchoMarker{e1},
               DelayEvent{tau}, pulse(180, p2), DelayEvent{tau}, EchoMarker{e2}};
  seq.repeats = n_echoes / 2;
  return seq;
}

}  // namespace

Sequence hahn(double tau) {
  if (!(tau > 0)) throw std::invalid_argument("tau must be positive");
  Sequence seq;
  seq.prologue = {prologue_pulse(90, 0)};
  seq.cycle = {DelayEvent{tau}, pulse(180, 90), DelayEvent{tau}, EchoMarker{90}};
  seq.repeats = 1;
  return seq;
}

Sequence cp(double tau, int n_echoes) { return two_pulse_train(tau, n_echoes, 0, 270, 0, 90); }

Sequence apcp(double tau, int n_echoes) {
  return two_pulse_train(tau, n_echoes, 180, 270, 0, 90);
}

Sequence cpmg(double tau, int n_echoes) {
  return two_pulse_train(tau, n_echoes, 90, 90, 90, 90);
}

Sequence apcpmg(double tau, int n_echoes) {
  return two_pulse_train(tau, n_echoes, 270, 90, 90, 90);
}

Sequence ostroff_waugh(double tau, int n_blocks) {
  if (!(tau > 0)) throw std::invalid_argument("tau must be positive");
  if (n_blocks <= 0) throw std::invalid_argument("n_blocks must be positive");
  Sequence seq;
  seq.prologue = {prologue_pulse(90, 0)};
  seq.cycle = {DelayEvent{tau}, pulse(90, 90), DelayEvent{tau}, EchoMarker{90}};
  seq.repeats = n_blocks;
  return seq;
}

Sequence with_bb1(const Sequence& seq) {
  Sequence out = seq;
  out.cycle.clear();
  double b = bb1_offset_deg();
  for (const auto& e : seq.cycle) {
    const auto* p = std::get_if<PulseEvent>(&e);
    if (p && p->angle_deg == 180.0 && !p->always_delta) {
      out.cycle.push_back(pulse(180, p->phase_deg + b));
      out.cycle.push_back(pulse(360, p->phase_deg + 3 * b));
      out.cycle.push_back(pulse(180, p->phase_deg + b));
      out.cycle.push_back(*p);
    } else {
      out.cycle.push_back(e);
    }
  }
  return out;
}

namespace {

std::string event_str(const Event& e) {
  if (const auto* p = std::get_if<PulseEvent>(&e))
    return number_str(p->angle_deg) + "(" + phase_name(p->phase_deg) + ")";
  if (const auto* d = std::get_if<DelayEvent>(&e)) return "d(" + number_str(d->duration) + "s)";
  return "echo(" + phase_name(std::get<EchoMarker>(e).expected_phase_deg) + ")";
}

}  // namespace

std::string render_sequence(const Sequence& seq) {
  std::string out;
  for (const auto& e : seq.prologue) {
    if (!out.empty()) out += " ";
    out += event_str(e);
  }
  out += out.empty() ? "; [" : " ; [";
  for (const auto& e : seq.cycle) out += " " + event_str(e);
  out += " ]*" + std::to_string(seq.repeats);
  return out;
}

double NetRotation::defect() const {
  std::complex<double> mean = (u(0, 0) + u(1, 1)) / 2.0;
  Eigen::Matrix2cd d = u - mean * Eigen::Matrix2cd::Identity();
  return d.cwiseAbs().maxCoeff();
}

double NetRotation::angle_deg() const {
  // u = cos(a/2) + i sin(a/2) (n . sigma) for a rotation by angle a about n.
  double c = std::clamp(((u(0, 0) + u(1, 1)) / 2.0).real(), -1.0, 1.0);
  return 2.0 * std::acos(std::fabs(c)) * 180.0 / kPi;
}

Eigen::Vector3d NetRotation::axis() const {
  Eigen::Vector3d v((u(0, 1) + u(1, 0)).imag() / 2.0, (u(0, 1) - u(1, 0)).real() / 2.0,
                    (u(0, 0) - u(1, 1)).imag() / 2.0);
  double n = v.norm();
  return n > 1e-12 ? Eigen::Vector3d(v / n) : Eigen::Vector3d(0, 0, 1);
}

std::string NetRotation::describe() const {
  Eigen::Vector3d n = axis();
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.6g deg about (%.3f, %.3f, %.3f)", angle_deg(), n.x(),
                n.y(), n.z());
  return buf;
}

NetRotation net_rotation(const std::vector<Event>& events) {
  NetRotation net;
  for (const auto& e : events) {
    const auto* p = std::get_if<PulseEvent>(&e);
    if (!p) continue;
    double half = p->angle_rad() / 2.0;
    double phi = p->phase_deg * kPi / 180.0;
    Eigen::Matrix2cd u;
    u << std::cos(half), kI * std::sin(half) * std::exp(-kI * phi),
        kI * std::sin(half) * std::exp(kI * phi), std::cos(half);
    net.u = u * net.u;
  }
  return net;
}

}  // namespace dipsim
