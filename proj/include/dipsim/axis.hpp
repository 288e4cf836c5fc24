#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dipsim {

// Axis for pulses and collective operators: either the static-field axis Z
// or a transverse direction given by its angle phi from +X in the rotating
// frame (+X = 0, +Y = pi/2, -X = pi, -Y = 3pi/2).
class SpinAxis {
public:
  enum class Kind { Z, Transverse };

  static SpinAxis z() { return SpinAxis(Kind::Z, 0.0); }
  static SpinAxis transverse(double phi) { return SpinAxis(Kind::Transverse, wrap(phi)); }
  static SpinAxis x() { return transverse(0.0); }
  static SpinAxis y() { return transverse(std::numbers::pi / 2); }
  static SpinAxis minus_x() { return transverse(std::numbers::pi); }
  static SpinAxis minus_y() { return transverse(3 * std::numbers::pi / 2); }

  // Accepts "X", "-X", "+Y", "Z", ... (case sensitive).
  static SpinAxis from_name(const std::string& name) {
    std::string s = name;
    if (!s.empty() && s[0] == '+') s = s.substr(1);
    if (s == "X") return x();
    if (s == "Y") return y();
    if (s == "-X") return minus_x();
    if (s == "-Y") return minus_y();
    if (s == "Z") return z();
    throw std::invalid_argument("unknown axis name: " + name);
  }

  Kind kind() const { return kind_; }
  bool is_z() const { return kind_ == Kind::Z; }

  // Angle from +X; only meaningful for transverse axes.
  double phase() const {
    if (kind_ != Kind::Transverse)
      throw std::logic_error("phase() called on Z axis");
    return phi_;
  }

  // "X", "-X", "Y", "-Y", "Z", or the phase in degrees for non-principal axes.
  std::string name() const {
    if (kind_ == Kind::Z) return "Z";
    constexpr double tol = 1e-12;
    const double pi = std::numbers::pi;
    if (angle_close(phi_, 0.0, tol)) return "X";
    if (angle_close(phi_, pi / 2, tol)) return "Y";
    if (angle_close(phi_, pi, tol)) return "-X";
    if (angle_close(phi_, 3 * pi / 2, tol)) return "-Y";
    return std::to_string(phi_ * 180.0 / pi);
  }

  friend bool operator==(const SpinAxis& a, const SpinAxis& b) {
    return a.kind_ == b.kind_ && a.phi_ == b.phi_;
  }
  friend bool operator!=(const SpinAxis& a, const SpinAxis& b) { return !(a == b); }

private:
  SpinAxis(Kind kind, double phi) : kind_(kind), phi_(phi) {}

  static double wrap(double phi) {
    const double two_pi = 2 * std::numbers::pi;
    double w = std::fmod(phi, two_pi);
    if (w < 0) w += two_pi;
    if (w == two_pi) w = 0.0;
    return w;
  }

  static bool angle_close(double a, double b, double tol) {
    const double two_pi = 2 * std::numbers::pi;
    double d = std::fabs(a - b);
    return d < tol || std::fabs(d - two_pi) < tol;
  }

  Kind kind_;
  double phi_;
};

}  // namespace dipsim
