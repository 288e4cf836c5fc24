#pragma once

#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "dipsim/axis.hpp"

namespace dipsim {

// Events store angles/phases in degrees and delays in seconds, exactly as
// parsed or constructed, so rendering round-trips bit-identically.

struct PulseEvent {
  double angle_deg = 0.0;   // rotation angle, > 0
  double phase_deg = 0.0;   // transverse phase from +X
  bool always_delta = false;  // prologue pulses: ideal under every model

  SpinAxis axis() const;
  double angle_rad() const;
};

struct DelayEvent {
  double duration = 0.0;  // seconds
};

// Marks a nominal echo position; expected_phase_deg is the transverse axis the
// refocused magnetization should point along (signals are sign-corrected so a
// perfect echo reads +1).
struct EchoMarker {
  double expected_phase_deg = 0.0;
  SpinAxis axis() const;
};

using Event = std::variant<PulseEvent, DelayEvent, EchoMarker>;

struct Sequence {
  std::vector<Event> prologue;  // applied once (pulses here are ideal)
  std::vector<Event> cycle;     // repeated `repeats` times
  int repeats = 0;

  int markers_per_cycle() const;
  int pulses_per_cycle() const;
  void validate() const;  // throws std::invalid_argument
};

// Canonical phase helpers (0/90/180/270 -> "X"/"Y"/"-X"/"-Y").
std::string phase_name(double phase_deg);
double phase_from_name(const std::string& name);  // throws on unknown names

// --- Table-style builders -------------------------------------------------
// All take the inter-pulse delay tau (the free delay on each side of every
// pi pulse) in seconds. n_echoes must be positive and even where the cycle
// holds two echoes.

Sequence hahn(double tau);                 // 90X ; [tau 180Y tau echo(Y)] * 1
Sequence cp(double tau, int n_echoes);     // 90X ; [tau 180X tau echo(-Y) tau 180X tau echo(Y)] * n/2
Sequence apcp(double tau, int n_echoes);   // 90X ; pulses -X,+X ; echoes -Y,+Y
Sequence cpmg(double tau, int n_echoes);   // 90X ; pulses +Y,+Y ; echoes +Y,+Y
Sequence apcpmg(double tau, int n_echoes); // 90X ; pulses -Y,+Y ; echoes +Y,+Y
Sequence ostroff_waugh(double tau, int n_blocks);  // 90X ; [tau 90Y tau echo(Y)] * n

// Replace every 180-degree cycle pulse by the BB1 composite
// 180_(p+b) 360_(p+3b) 180_(p+b) 180_p with b = arccos(-1/4), p the original
// phase. Total rf time is 5x the plain pulse.
Sequence with_bb1(const Sequence& seq);

// --- DSL ------------------------------------------------------------------
//   sequence := prologue ";" block
//   prologue := event*
//   block    := "[" event* "]" "*" INT
//   event    := ANGLE "(" PHASE ")" | "d(" TIME ")" | "echo(" PHASE ")"
// ANGLE in degrees; TIME with suffix s/ms/us/ns; PHASE one of X,-X,Y,-Y
// (optionally +X/+Y) or a number in degrees.

class SequenceParseError : public std::runtime_error {
public:
  SequenceParseError(const std::string& msg, int line, int col, std::size_t offset);
  int line() const { return line_; }
  int col() const { return col_; }
  std::size_t offset() const { return offset_; }

private:
  int line_, col_;
  std::size_t offset_;
};

Sequence parse_sequence(const std::string& text);
std::string render_sequence(const Sequence& seq);  // canonical; parse/render idempotent

// Net rf rotation of a list of events (pulses only), as the 2x2 spin-1/2
// rotation product. Used to test rf cyclicity of a sequence cycle.
struct NetRotation {
  Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
  // Distance from a multiple of the identity (global phase ignored).
  double defect() const;
  bool cyclic(double tol = 1e-10) const { return defect() < tol; }
  // Rotation angle in [0, 360] and unit axis, e.g. "90 deg about (0, 1, 0)".
  double angle_deg() const;
  Eigen::Vector3d axis() const;
  std::string describe() const;
};
NetRotation net_rotation(const std::vector<Event>& events);

}  // namespace dipsim
