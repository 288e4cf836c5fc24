#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "dipsim/config.hpp"

namespace dipsim {

// Flag-level overrides applied after the config file loads.
struct CliOverrides {
  int workers = -1;        // <0 = keep config value
  std::int64_t seed = -1;  // <0 = keep per-run seeds
  std::string outdir;      // empty = keep config value
};
void apply_cli_overrides(Config& cfg, const CliOverrides& o);

// Ensemble runs -> CSV (echo_index,time_s,mean,stderr,magnitude_mean) plus a
// .meta.json sidecar per run.
void cmd_run(const Config& cfg);

// Flip-flop-dropped closed-form curves for the same configs -> CSV
// ("<stem>_analytic.csv") with the same columns.
void cmd_analytic(const Config& cfg);

// Average-Hamiltonian report (interval table, term norms, closed-form
// residuals where the sequence is recognized, defect scaling) -> JSON.
void cmd_aht(const Config& cfg);

// Density-matrix snapshot exports at the configured echo indices: single
// realization and disorder-averaged, ideal-pulse and exact-pulse.
void cmd_snapshot(const Config& cfg);

// List preset config files in a directory ("name - description").
void cmd_list_presets(const std::string& dir, std::ostream& out);

}  // namespace dipsim
