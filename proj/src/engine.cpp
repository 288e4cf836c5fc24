#include "dipsim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "dipsim/aht.hpp"
#include "dipsim/rng.hpp"

namespace dipsim {

namespace {

constexpr double kPi = std::numbers::pi;
const Complex kI(0.0, 1.0);

double real_trace_product(const Operator& rho, const Operator& a) {
  // tr(rho * a) without forming the product.
  return (rho.transpose().cwiseProduct(a)).sum().real();
}

}  // namespace

void ModelSpec::validate() const {
  if (type != Type::Delta && !(omega1_over_2pi > 0))
    throw std::invalid_argument("model '" + name() + "' requires omega1_over_2pi > 0");
}

std::string ModelSpec::name() const {
  switch (type) {
    case Type::Delta: return "delta";
    case Type::ExactFinite: return "exact_finite";
    case Type::InterruptedH0: return "interrupted_h0";
    case Type::AvgH0: return "avg_h0";
    case Type::AvgH0H1: return "avg_h0_h1";
  }
  return "?";
}

ModelSpec ModelSpec::from_name(const std::string& name, double omega1_over_2pi) {
  ModelSpec m;
  m.omega1_over_2pi = omega1_over_2pi;
  if (name == "delta")
    m.type = Type::Delta;
  else if (name == "exact_finite")
    m.type = Type::ExactFinite;
  else if (name == "interrupted_h0")
    m.type = Type::InterruptedH0;
  else if (name == "avg_h0")
    m.type = Type::AvgH0;
  else if (name == "avg_h0_h1")
    m.type = Type::AvgH0H1;
  else
    throw std::invalid_argument("unknown pulse model: " + name);
  m.validate();
  return m;
}

std::string detection_name(Detection d) { return d == Detection::Total ? "total" : "central"; }

Detection detection_from_name(const std::string& name) {
  if (name == "total") return Detection::Total;
  if (name == "central") return Detection::Central;
  throw std::invalid_argument("unknown detection: " + name);
}

namespace {

// Duration a pulse occupies on the clock under a given model.
double pulse_clock(const PulseEvent& p, const ModelSpec& model) {
  if (!model.finite_width() || p.always_delta) return 0.0;
  return p.angle_rad() / (2 * kPi * model.omega1_over_2pi);
}

struct EigenSystem {
  Eigen::VectorXd lambda;
  Operator v;
};

class Evolver {
public:
  Evolver(const Operator& h0, int n, const Sequence& seq, const ModelSpec& model, Detection det,
          const std::vector<int>& snapshot_echoes)
      : h0_(h0), n_(n), seq_(seq), model_(model), snaps_(snapshot_echoes) {
    dim_ = dim_for(n);
    if (h0.rows() != dim_ || h0.cols() != dim_)
      throw std::invalid_argument("h0 dimension does not match n_spins");
    model.validate();
    seq.validate();
    if (seq.repeats > 0 && seq.markers_per_cycle() == 0)
      throw std::invalid_argument("cycle has no echo markers");

    det_x_ = det == Detection::Total ? collective_op(n, SpinAxis::x())
                                     : single_spin_op(n, 0, SpinAxis::x());
    det_y_ = det == Detection::Total ? collective_op(n, SpinAxis::y())
                                     : single_spin_op(n, 0, SpinAxis::y());
    norm_ = real_trace_product(collective_op(n, SpinAxis::y()), det_y_);
    rho_ = collective_op(n, SpinAxis::z());
    purity0_ = rho_.squaredNorm();
  }

  RunResult run() {
    apply_prologue();
    if (model_.stroboscopic())
      run_stroboscopic();
    else
      run_exact();
    result_.stats.cached_propagators = static_cast<int>(cache_.size());
    return std::move(result_);
  }

private:
  const EigenSystem& h0_eigen() {
    if (!h0_es_.v.size()) {
      Eigen::SelfAdjointEigenSolver<Operator> es(h0_);
      if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
      h0_es_.lambda = es.eigenvalues();
      h0_es_.v = es.eigenvectors();
      ++result_.stats.eigendecompositions;
    }
    return h0_es_;
  }

  Operator free_propagator(double tau) {
    const EigenSystem& es = h0_eigen();
    Eigen::VectorXcd ph = ((-kI * tau) * es.lambda.cast<Complex>().array()).exp();
    return es.v * ph.asDiagonal() * es.v.adjoint();
  }

  // Cache of the distinct cycle propagators, keyed by event parameters.
  using Key = std::tuple<int, double, double>;  // kind(0 delay,1 pulse,2 ideal pulse), a, b
  const Operator& cached(const Key& key) {
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    Operator u;
    if (std::get<0>(key) == 0) {
      u = free_propagator(std::get<1>(key));
    } else {
      double angle_deg = std::get<1>(key), phase_deg = std::get<2>(key);
      SpinAxis axis = SpinAxis::transverse(phase_deg * kPi / 180.0);
      double angle = angle_deg * kPi / 180.0;
      if (std::get<0>(key) == 1 && model_.type == ModelSpec::Type::ExactFinite) {
        double t_p = angle / (2 * kPi * model_.omega1_over_2pi);
        u = propagator(pulse_hamiltonian(h0_, axis, model_.omega1_over_2pi), t_p);
        ++result_.stats.eigendecompositions;
      } else {
        u = delta_pulse(n_, angle, axis);  // Delta, InterruptedH0, and ideal pulses
      }
    }
    result_.stats.max_unitarity_defect =
        std::max(result_.stats.max_unitarity_defect, unitarity_defect(u));
    return cache_.emplace(key, std::move(u)).first->second;
  }

  void apply_unitary(const Operator& u) { rho_ = u * rho_ * u.adjoint(); }

  void apply_prologue() {
    for (const auto& e : seq_.prologue) {
      if (const auto* p = std::get_if<PulseEvent>(&e)) {
        // Preparation pulses do not count towards pulses_applied.
        apply_unitary(delta_pulse(n_, p->angle_rad(), p->axis()));
      } else if (const auto* d = std::get_if<DelayEvent>(&e)) {
        if (d->duration > 0) {
          apply_unitary(free_propagator(d->duration));
          time_ += d->duration;
        }
      }
    }
  }

  void record_marker(double phase_deg) {
    ++marker_index_;
    if (!result_.train.time_s.empty() && time_ <= result_.train.time_s.back())
      throw std::invalid_argument("echo markers must be separated in time");
    double sx = real_trace_product(rho_, det_x_) / norm_;
    double sy = real_trace_product(rho_, det_y_) / norm_;
    double phi = phase_deg * kPi / 180.0;
    result_.train.echo_index.push_back(marker_index_);
    result_.train.time_s.push_back(time_);
    result_.train.amp.push_back(std::cos(phi) * sx + std::sin(phi) * sy);
    result_.train.magnitude.push_back(std::hypot(sx, sy));

    result_.stats.trace_drift =
        std::max(result_.stats.trace_drift, std::abs(rho_.trace()));
    result_.stats.purity_drift = std::max(
        result_.stats.purity_drift, std::fabs(rho_.squaredNorm() - purity0_) / purity0_);

    if (std::find(snaps_.begin(), snaps_.end(), marker_index_) != snaps_.end())
      result_.snapshots.push_back({marker_index_, time_, pulses_, rho_});
  }

  void run_exact() {
    struct Segment {
      Operator u;
      double duration = 0.0;
      int pulses = 0;
      bool has_marker = false;
      double marker_phase_deg = 0.0;
    };
    std::vector<Segment> segments;
    Segment cur{Operator::Identity(dim_, dim_), 0.0, 0, false, 0.0};
    for (const auto& e : seq_.cycle) {
      if (const auto* d = std::get_if<DelayEvent>(&e)) {
        if (d->duration > 0) {
          cur.u = cached({0, d->duration, 0.0}) * cur.u;
          cur.duration += d->duration;
        }
      } else if (const auto* p = std::get_if<PulseEvent>(&e)) {
        cur.u = cached({p->always_delta ? 2 : 1, p->angle_deg, p->phase_deg}) * cur.u;
        cur.duration += pulse_clock(*p, model_);
        ++cur.pulses;
      } else {
        cur.has_marker = true;
        cur.marker_phase_deg = std::get<EchoMarker>(e).expected_phase_deg;
        segments.push_back(std::move(cur));
        cur = Segment{Operator::Identity(dim_, dim_), 0.0, 0, false, 0.0};
      }
    }
    if (cur.duration > 0 || cur.pulses > 0) segments.push_back(std::move(cur));

    for (int rep = 0; rep < seq_.repeats; ++rep) {
      for (const auto& seg : segments) {
        apply_unitary(seg.u);
        time_ += seg.duration;
        pulses_ += seg.pulses;
        if (seg.has_marker) record_marker(seg.marker_phase_deg);
      }
    }
  }

  void run_stroboscopic() {
    TogglingFrame frame = toggling_frame(seq_, h0_, n_, model_.omega1_over_2pi);
    Operator hbar = magnus0(frame);
    if (model_.type == ModelSpec::Type::AvgH0H1) hbar += magnus1(frame);
    Operator step = propagator(hbar, frame.t_c);
    ++result_.stats.eigendecompositions;
    result_.stats.max_unitarity_defect =
        std::max(result_.stats.max_unitarity_defect, unitarity_defect(step));

    double last_phase = 90.0;
    for (const auto& e : seq_.cycle)
      if (const auto* m = std::get_if<EchoMarker>(&e)) last_phase = m->expected_phase_deg;

    int steps = seq_.repeats / frame.span;
    for (int k = 1; k <= steps; ++k) {
      apply_unitary(step);
      time_ += frame.t_c;
      pulses_ += frame.pulses_per_span;
      // Cycle boundaries coincide with every markers_per_span-th echo.
      marker_index_ += frame.markers_per_span - 1;
      record_marker(last_phase);
    }
  }

  const Operator& h0_;
  int n_;
  const Sequence& seq_;
  ModelSpec model_;
  std::vector<int> snaps_;
  int dim_;
  Operator det_x_, det_y_, rho_;
  double norm_ = 1.0;
  double purity0_ = 1.0;
  double time_ = 0.0;
  int pulses_ = 0;
  int marker_index_ = 0;
  EigenSystem h0_es_;
  std::map<Key, Operator> cache_;
  RunResult result_;
};

}  // namespace

RunResult run_with_hamiltonian(const Operator& h0, int n_spins, const Sequence& seq,
                               const ModelSpec& model, Detection det,
                               const std::vector<int>& snapshot_echoes) {
  Evolver ev(h0, n_spins, seq, model, det, snapshot_echoes);
  return ev.run();
}

RunResult run_dr(const Realization& real, const Sequence& seq, const ModelSpec& model,
                 Detection det, const std::vector<int>& snapshot_echoes) {
  Operator h0 = free_hamiltonian(real.couplings, real.offset_hz);
  return run_with_hamiltonian(h0, real.couplings.n_spins(), seq, model, det, snapshot_echoes);
}

std::vector<double> echo_times(const Sequence& seq, const ModelSpec& model) {
  model.validate();
  seq.validate();
  double t = 0.0;
  for (const auto& e : seq.prologue) {
    if (const auto* d = std::get_if<DelayEvent>(&e)) t += d->duration;
    if (const auto* p = std::get_if<PulseEvent>(&e)) t += pulse_clock(*p, model);
  }
  std::vector<double> out;
  if (!model.stroboscopic()) {
    for (int rep = 0; rep < seq.repeats; ++rep) {
      for (const auto& e : seq.cycle) {
        if (const auto* d = std::get_if<DelayEvent>(&e))
          t += d->duration;
        else if (const auto* p = std::get_if<PulseEvent>(&e))
          t += pulse_clock(*p, model);
        else
          out.push_back(t);
      }
    }
    return out;
  }
  // Stroboscopic: samples at extended-cycle boundaries only.
  double cycle_t = 0.0;
  for (const auto& e : seq.cycle) {
    if (const auto* d = std::get_if<DelayEvent>(&e)) cycle_t += d->duration;
    if (const auto* p = std::get_if<PulseEvent>(&e)) cycle_t += pulse_clock(*p, model);
  }
  NetRotation acc = net_rotation(seq.cycle);
  int span = 1;
  while (span < 4 && !acc.cyclic()) {
    acc.u = acc.u * acc.u;
    span *= 2;
  }
  if (!acc.cyclic())
    throw std::invalid_argument("rf rotation of the cycle is not cyclic within 4 repetitions");
  for (int k = 1; k <= seq.repeats / span; ++k) out.push_back(t + k * span * cycle_t);
  return out;
}

EnsembleResult run_ensemble(const LatticeSpec& lat, const DisorderConfig& cfg,
                            const Sequence& seq, const ModelSpec& model, int n_dr,
                            std::uint64_t master_seed, Detection det, int workers) {
  if (n_dr <= 0) throw std::invalid_argument("n_dr must be positive");
  int nw = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
  nw = std::clamp(nw, 1, n_dr);

  std::vector<EchoTrain> trains(n_dr);
  std::vector<RunStats> stats(n_dr);
  std::vector<std::exception_ptr> errors(n_dr);
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};

  auto work = [&]() {
    while (true) {
      int k = next.fetch_add(1);
      if (k >= n_dr || failed.load()) break;
      try {
        Realization real = sample_realization(lat, cfg, mix_seed(master_seed, k));
        RunResult res = run_dr(real, seq, model, det);
        trains[k] = std::move(res.train);
        stats[k] = res.stats;
      } catch (...) {
        errors[k] = std::current_exception();
        failed.store(true);
      }
    }
  };

  if (nw == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (int i = 0; i < nw; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (int k = 0; k < n_dr; ++k)
    if (errors[k]) std::rethrow_exception(errors[k]);

  EnsembleResult out;
  out.n_dr = n_dr;
  for (const auto& s : stats) {
    out.stats.eigendecompositions = std::max(out.stats.eigendecompositions, s.eigendecompositions);
    out.stats.cached_propagators = std::max(out.stats.cached_propagators, s.cached_propagators);
    out.stats.max_unitarity_defect = std::max(out.stats.max_unitarity_defect, s.max_unitarity_defect);
    out.stats.trace_drift = std::max(out.stats.trace_drift, s.trace_drift);
    out.stats.purity_drift = std::max(out.stats.purity_drift, s.purity_drift);
  }
  out.echo_index = trains[0].echo_index;
  out.time_s = trains[0].time_s;
  std::size_t m = trains[0].time_s.size();
  for (const auto& tr : trains)
    if (tr.time_s.size() != m) throw std::runtime_error("inconsistent echo trains");

  out.mean.assign(m, 0.0);
  out.sem.assign(m, 0.0);
  out.magnitude_mean.assign(m, 0.0);
  for (int k = 0; k < n_dr; ++k) {
    for (std::size_t i = 0; i < m; ++i) {
      out.mean[i] += trains[k].amp[i];
      out.magnitude_mean[i] += trains[k].magnitude[i];
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    out.mean[i] /= n_dr;
    out.magnitude_mean[i] /= n_dr;
  }
  if (n_dr > 1) {
    for (std::size_t i = 0; i < m; ++i) {
      double ss = 0;
      for (int k = 0; k < n_dr; ++k) {
        double d = trains[k].amp[i] - out.mean[i];
        ss += d * d;
      }
      out.sem[i] = std::sqrt(ss / (n_dr - 1)) / std::sqrt(static_cast<double>(n_dr));
    }
  }
  out.per_dr = std::move(trains);
  return out;
}

std::vector<double> analytic_ising_echo(const CouplingTable& b, const std::vector<double>& times,
                                        Detection det) {
  int n = b.n_spins();
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) {
    double s = 0.0;
    int count = det == Detection::Total ? n : 1;
    for (int i = 0; i < count; ++i) {
      double prod = 1.0;
      for (int j = 0; j < n; ++j)
        if (j != i) prod *= std::cos(2 * kPi * b.b(i, j) * t);
      s += prod;
    }
    out.push_back(s / count);
  }
  return out;
}

}  // namespace dipsim
