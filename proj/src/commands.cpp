#include "dipsim/commands.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <nlohmann/json.hpp>

#include "dipsim/aht.hpp"
#include "dipsim/observables.hpp"
#include "dipsim/rng.hpp"

namespace dipsim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kSeedDerivation =
    "realization_seed(k) = splitmix64_mix(master_seed + (k+1) * 0x9e3779b97f4a7c15)";

std::string iso_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
#if defined(_WIN32)
  gmtime_s(&tm, &t);
#else
  gmtime_r(&t, &tm);
#endif
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Shortest exact decimal form; CSV files must be byte-stable across runs.
std::string num17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct CsvRow {
  int echo_index = 0;
  double time_s = 0.0, mean = 0.0, stderr_ = 0.0, magnitude_mean = 0.0;
};

void write_csv(const fs::path& path, const std::vector<CsvRow>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "echo_index,time_s,mean,stderr,magnitude_mean\n";
  for (const auto& r : rows)
    f << r.echo_index << ',' << num17(r.time_s) << ',' << num17(r.mean) << ','
      << num17(r.stderr_) << ',' << num17(r.magnitude_mean) << '\n';
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << j.dump(1, '\t') << '\n';
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

json stats_to_json(const RunStats& s) {
  json j;
  j["eigendecompositions"] = s.eigendecompositions;
  j["cached_propagators"] = s.cached_propagators;
  j["max_unitarity_defect"] = s.max_unitarity_defect;
  j["trace_drift"] = s.trace_drift;
  j["purity_drift"] = s.purity_drift;
  return j;
}

void fold_stats(RunStats& into, const RunStats& s) {
  into.eigendecompositions += s.eigendecompositions;
  into.cached_propagators += s.cached_propagators;
  into.max_unitarity_defect = std::max(into.max_unitarity_defect, s.max_unitarity_defect);
  into.trace_drift = std::max(into.trace_drift, s.trace_drift);
  into.purity_drift = std::max(into.purity_drift, s.purity_drift);
}

// Sidecar written next to every CSV: enough to reproduce the file exactly.
void write_sidecar(const fs::path& csv_path, const Config& cfg, const RunSpec& run,
                   const char* command, json extra) {
  json j;
  j["command"] = command;
  j["run"] = run.name;
  j["created"] = iso_now();
  j["input_hash"] = "sha1:" + config_hash(cfg);
  j["master_seed"] = run.seed;
  j["seed_derivation"] = kSeedDerivation;
  j["workers"] = cfg.workers;
  j["n_dr"] = run.n_dr;
  j["columns"] = json::array({"echo_index", "time_s", "mean", "stderr", "magnitude_mean"});
  j["stderr_definition"] = "sample standard deviation / sqrt(n_dr)";
  for (auto& [k, v] : extra.items()) j[k] = std::move(v);
  j["config"] = cfg.resolved;
  write_json_file(fs::path(csv_path.string() + ".meta.json"), j);
}

fs::path run_csv_path(const Config& cfg, const RunSpec& run) {
  fs::path p = fs::path(cfg.outdir) / run.output.csv;
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

int effective_workers(const Config& cfg) {
  int w = cfg.workers;
  if (w <= 0) w = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, w);
}

double first_tau(const SequenceSpec& s) {
  return s.tau_sweep.empty() ? s.tau : s.tau_sweep.front();
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void apply_cli_overrides(Config& cfg, const CliOverrides& o) {
  if (o.workers >= 0) cfg.workers = o.workers;
  if (!o.outdir.empty()) cfg.outdir = o.outdir;
  if (o.seed >= 0)
    for (auto& run : cfg.runs) run.seed = static_cast<std::uint64_t>(o.seed);
  refresh_resolved(cfg);
}

void cmd_run(const Config& cfg) {
  fs::create_directories(cfg.outdir);
  for (const auto& run : cfg.runs) {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<CsvRow> rows;
    RunStats stats;
    json extra;
    if (run.sequence.tau_sweep.empty()) {
      Sequence seq = run.sequence.build();
      EnsembleResult ens = run_ensemble(run.lattice, run.disorder, seq, run.model, run.n_dr,
                                        run.seed, run.detection, cfg.workers);
      rows.reserve(ens.echo_index.size());
      for (std::size_t i = 0; i < ens.echo_index.size(); ++i)
        rows.push_back({ens.echo_index[i], ens.time_s[i], ens.mean[i], ens.sem[i],
                        ens.magnitude_mean[i]});
      stats = ens.stats;
    } else {
      // One ensemble per tau; report the final echo of each train, one row per
      // tau in sweep order (echo_index = 1-based sweep position).
      extra["tau_sweep"] = run.sequence.tau_sweep;
      extra["row_semantics"] = "one row per tau value; values taken at the final echo";
      for (std::size_t i = 0; i < run.sequence.tau_sweep.size(); ++i) {
        Sequence seq = run.sequence.build_with_tau(run.sequence.tau_sweep[i]);
        EnsembleResult ens = run_ensemble(run.lattice, run.disorder, seq, run.model, run.n_dr,
                                          run.seed, run.detection, cfg.workers);
        if (ens.mean.empty()) throw std::runtime_error("run '" + run.name + "': no echoes");
        rows.push_back({static_cast<int>(i) + 1, ens.time_s.back(), ens.mean.back(),
                        ens.sem.back(), ens.magnitude_mean.back()});
        fold_stats(stats, ens.stats);
      }
    }
    fs::path csv = run_csv_path(cfg, run);
    write_csv(csv, rows);
    extra["stats"] = stats_to_json(stats);
    extra["model"] = run.model.name();
    extra["elapsed_s"] = elapsed_s(t0);
    write_sidecar(csv, cfg, run, "run", std::move(extra));
    std::cout << "run " << run.name << ": n_dr=" << run.n_dr << " echoes=" << rows.size()
              << " -> " << csv.string() << " (" << num17(elapsed_s(t0)) << " s)\n";
  }
}

void cmd_analytic(const Config& cfg) {
  fs::create_directories(cfg.outdir);
  const ModelSpec delta{};  // ideal pulses: the closed form assumes zero width
  for (const auto& run : cfg.runs) {
    // Echo times under the ideal-pulse clock, one train per tau when sweeping.
    std::vector<double> times;
    bool sweep = !run.sequence.tau_sweep.empty();
    if (sweep) {
      for (double tau : run.sequence.tau_sweep) {
        std::vector<double> t = echo_times(run.sequence.build_with_tau(tau), delta);
        if (t.empty()) throw std::runtime_error("run '" + run.name + "': no echoes");
        times.push_back(t.back());
      }
    } else {
      times = echo_times(run.sequence.build(), delta);
    }
    const std::size_t m = times.size();
    std::vector<double> sum(m, 0.0), sumsq(m, 0.0), summag(m, 0.0);
    for (int k = 0; k < run.n_dr; ++k) {
      Realization real =
          sample_realization(run.lattice, run.disorder, mix_seed(run.seed, k));
      std::vector<double> s = analytic_ising_echo(real.couplings, times, run.detection);
      for (std::size_t i = 0; i < m; ++i) {
        sum[i] += s[i];
        sumsq[i] += s[i] * s[i];
        summag[i] += std::abs(s[i]);
      }
    }
    std::vector<CsvRow> rows(m);
    for (std::size_t i = 0; i < m; ++i) {
      double mean = sum[i] / run.n_dr;
      double var = run.n_dr > 1 ? (sumsq[i] - run.n_dr * mean * mean) / (run.n_dr - 1) : 0.0;
      rows[i] = {static_cast<int>(i) + 1, times[i], mean,
                 std::sqrt(std::max(0.0, var) / run.n_dr), summag[i] / run.n_dr};
    }
    fs::path base = run_csv_path(cfg, run);
    fs::path csv = base.parent_path() / (base.stem().string() + "_analytic.csv");
    write_csv(csv, rows);
    json extra;
    extra["signal"] = "flip-flop terms dropped: S(t) averages prod_j cos(2 pi B_ij t)";
    if (sweep) {
      extra["tau_sweep"] = run.sequence.tau_sweep;
      extra["row_semantics"] = "one row per tau value; values taken at the final echo";
    }
    write_sidecar(csv, cfg, run, "analytic", std::move(extra));
    std::cout << "analytic " << run.name << ": n_dr=" << run.n_dr << " -> " << csv.string()
              << "\n";
  }
}

void cmd_aht(const Config& cfg) {
  fs::create_directories(cfg.outdir);
  for (const auto& run : cfg.runs) {
    Realization real = sample_realization(run.lattice, run.disorder, mix_seed(run.seed, 0));
    const int n = run.disorder.n_spins;
    Operator h0 = free_hamiltonian(real.couplings, real.offset_hz);
    double f1 = run.model.omega1_over_2pi;
    Sequence seq = run.sequence.build_with_tau(first_tau(run.sequence));

    TogglingFrame frame;
    try {
      frame = toggling_frame(seq, h0, n, f1);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("run '" + run.name + "': " + e.what());
    }
    Operator m0 = magnus0(frame);
    Operator m1 = magnus1(frame);

    json j;
    j["run"] = run.name;
    j["created"] = iso_now();
    j["input_hash"] = "sha1:" + config_hash(cfg);
    j["sequence"] = render_sequence(seq);
    j["n_spins"] = n;
    j["omega1_over_2pi"] = f1;
    j["realization_seed"] = mix_seed(run.seed, 0);
    j["offset_hz"] = real.offset_hz;
    j["t_c_s"] = frame.t_c;
    j["span"] = frame.span;
    j["markers_per_span"] = frame.markers_per_span;
    j["pulses_per_span"] = frame.pulses_per_span;

    json intervals = json::array();
    for (const auto& iv : frame.intervals) {
      json e;
      e["kind"] = iv.is_pulse ? "pulse" : "delay";
      e["duration_s"] = iv.duration;
      if (iv.is_pulse) {
        e["phase_deg"] = iv.phase_deg;
        e["angle_deg"] = iv.angle_deg;
      }
      intervals.push_back(std::move(e));
    }
    j["intervals"] = std::move(intervals);

    json norms;
    norms["hbar0_frobenius_rad_s"] = m0.norm();
    norms["hbar0_max_abs_rad_s"] = m0.cwiseAbs().maxCoeff();
    norms["hbar1_frobenius_rad_s"] = m1.norm();
    norms["hbar1_max_abs_rad_s"] = m1.cwiseAbs().maxCoeff();
    j["norms"] = std::move(norms);

    // The two-pulse +/-Y cycle has closed forms for both leading terms;
    // report the match when this run uses that cycle unmodified.
    if (run.sequence.kind == "cpmg" && !run.sequence.bb1) {
      double t_p = f1 > 0 ? 0.5 / f1 : 0.0;
      CpmgClosedForm cf =
          cpmg_closed_form(real.couplings, real.offset_hz, first_tau(run.sequence), t_p);
      json c;
      c["hbar0_abs_rad_s"] = (m0 - cf.hbar0).norm();
      c["hbar0_rel"] = (m0 - cf.hbar0).norm() / cf.hbar0.norm();
      double d1 = (m1 - cf.hbar1).norm(), n1 = cf.hbar1.norm();
      c["hbar1_abs_rad_s"] = d1;
      c["hbar1_rel"] = n1 > 0 ? d1 / n1 : d1;
      j["closed_form_residuals"] = std::move(c);
    }
    if (run.sequence.kind == "ow") {
      // For this cycle the leading term is -1/2 the y-rotated dipolar
      // Hamiltonian at any pulse width (exact when the offset is zero).
      Operator target = -0.5 * rotated_dipolar_ops(real.couplings).hyy;
      j["ow_residual_rel"] = (m0 - target).norm() / target.norm();
    }

    // Defect of the truncated expansion against the exact cycle propagator,
    // at full and half interaction strength (dim-limited: SVD cost).
    if (n <= 8) {
      json table = json::array();
      std::array<double, 2> lambdas{1.0, 0.5};
      std::array<std::array<double, 2>, 2> defects{};
      for (int li = 0; li < 2; ++li) {
        double lam = lambdas[li];
        CouplingTable scaled(Eigen::MatrixXd(lam * real.couplings.b));
        Operator h0s = free_hamiltonian(scaled, lam * real.offset_hz);
        for (int order = 0; order <= 1; ++order) {
          double d = cycle_defect(h0s, n, seq, f1, order);
          defects[li][order] = d;
          json row;
          row["lambda"] = lam;
          row["order"] = order;
          row["defect"] = d;
          table.push_back(std::move(row));
        }
      }
      json ratios;
      ratios["order0"] = defects[1][0] > 0 ? defects[0][0] / defects[1][0] : 0.0;
      ratios["order1"] = defects[1][1] > 0 ? defects[0][1] / defects[1][1] : 0.0;
      j["defect_table"] = std::move(table);
      j["defect_ratio_full_over_half"] = std::move(ratios);
    } else {
      j["defect_table"] = "skipped: n_spins > 8";
    }

    fs::path out = fs::path(cfg.outdir) / ("aht_" + run.name + ".json");
    write_json_file(out, j);
    std::cout << "aht " << run.name << " -> " << out.string() << "\n";
  }
}

void cmd_snapshot(const Config& cfg) {
  fs::create_directories(cfg.outdir);
  for (const auto& run : cfg.runs) {
    const std::vector<int>& echoes = run.output.snapshot_echoes;
    if (echoes.empty()) continue;  // nothing scheduled for this run

    double f1 = run.model.omega1_over_2pi;
    if (f1 <= 0)
      throw ConfigError("run '" + run.name +
                        "': snapshots need model.omega1_over_2pi > 0 for the exact-pulse row");
    Sequence seq = run.sequence.build_with_tau(first_tau(run.sequence));
    const int n = run.disorder.n_spins;
    const double thr = run.output.snapshot_threshold;

    struct ModelRow {
      const char* tag;
      ModelSpec model;
    };
    ModelSpec exact;
    exact.type = ModelSpec::Type::ExactFinite;
    exact.omega1_over_2pi = f1;
    const std::array<ModelRow, 2> models{{{"delta", ModelSpec{}}, {"exact", exact}}};

    auto file_base = [&](int echo, const char* tag, const std::string& who) {
      return (fs::path(cfg.outdir) /
              (run.name + "_e" + std::to_string(echo) + "_" + tag + "_" + who))
          .string();
    };
    int written = 0;

    for (const auto& mr : models) {
      // Single chosen realization.
      const int kd = run.output.snapshot_dr;
      Realization real = sample_realization(run.lattice, run.disorder, mix_seed(run.seed, kd));
      RunResult single = run_dr(real, seq, mr.model, run.detection, echoes);
      for (const auto& s : single.snapshots) {
        std::string base = file_base(s.echo_index, mr.tag, "dr" + std::to_string(kd));
        write_snapshot_ppm(base + ".ppm", s.rho, n, thr);
        write_snapshot_json(base + ".json", s.rho, n, s.echo_index, s.time_s,
                            s.pulses_applied);
        written += 2;
      }

      // Disorder average, accumulated in ascending k for determinism; windows
      // bound memory while letting realizations run in parallel.
      const int workers = effective_workers(cfg);
      const int window = std::min(run.n_dr, workers * 4);
      std::vector<Operator> sums;
      std::vector<Snapshot> meta;
      for (int base_k = 0; base_k < run.n_dr; base_k += window) {
        const int count = std::min(window, run.n_dr - base_k);
        std::vector<std::vector<Snapshot>> slot(count);
        std::vector<std::exception_ptr> errs(count);
        std::atomic<int> next{0};
        auto work = [&]() {
          for (;;) {
            int i = next.fetch_add(1);
            if (i >= count) return;
            try {
              Realization r =
                  sample_realization(run.lattice, run.disorder, mix_seed(run.seed, base_k + i));
              slot[i] = run_dr(r, seq, mr.model, run.detection, echoes).snapshots;
            } catch (...) {
              errs[i] = std::current_exception();
            }
          }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < std::min(workers, count); ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
        for (int i = 0; i < count; ++i) {
          if (errs[i]) std::rethrow_exception(errs[i]);
          if (sums.empty()) {
            meta = slot[i];
            for (const auto& s : slot[i]) sums.push_back(s.rho);
          } else {
            for (std::size_t sj = 0; sj < sums.size(); ++sj) sums[sj] += slot[i][sj].rho;
          }
        }
      }
      for (std::size_t sj = 0; sj < sums.size(); ++sj) {
        Operator avg = sums[sj] / static_cast<double>(run.n_dr);
        std::string base = file_base(meta[sj].echo_index, mr.tag, "avg");
        write_snapshot_ppm(base + ".ppm", avg, n, thr);
        write_snapshot_json(base + ".json", avg, n, meta[sj].echo_index, meta[sj].time_s,
                            meta[sj].pulses_applied, run.n_dr);
        written += 2;
      }
    }
    std::cout << "snapshot " << run.name << ": " << written << " files in " << cfg.outdir
              << "\n";
  }
}

void cmd_list_presets(const std::string& dir, std::ostream& out) {
  if (!fs::is_directory(dir)) throw ConfigError("preset directory not found: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    std::string desc;
    std::ifstream f(p);
    json j = json::parse(f, nullptr, false, /*ignore_comments=*/true);
    if (!j.is_discarded()) desc = j.value("description", "");
    out << p.stem().string();
    if (!desc.empty()) out << " - " << desc;
    out << "\n";
  }
}

}  // namespace dipsim
