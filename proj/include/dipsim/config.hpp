#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dipsim/engine.hpp"
#include "dipsim/lattice.hpp"
#include "dipsim/sequence.hpp"

namespace dipsim {

// Configuration problems (bad file, unknown key, invalid value, bad --set
// path). The CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Sequence recipe: a named builder with parameters, or a DSL string. A
// non-empty tau_sweep replaces tau and yields one ensemble per value.
struct SequenceSpec {
  std::string kind = "cpmg";  // hahn|cp|apcp|cpmg|apcpmg|ow|dsl
  double tau = 0.0;           // seconds
  int n_echoes = 0;           // ow: number of blocks
  bool bb1 = false;
  std::string text;           // kind == "dsl"
  std::vector<double> tau_sweep;

  Sequence build() const { return build_with_tau(tau); }
  Sequence build_with_tau(double tau_value) const;
};

struct OutputSpec {
  std::string csv;                  // defaults to "<run name>.csv"
  std::vector<int> snapshot_echoes;
  int snapshot_dr = 0;              // realization index for single-DR snapshots
  double snapshot_threshold = 0.02;
};

struct RunSpec {
  std::string name;
  LatticeSpec lattice = LatticeSpec::diamond();
  DisorderConfig disorder;
  SequenceSpec sequence;
  ModelSpec model;
  Detection detection = Detection::Total;
  int n_dr = 1;
  std::uint64_t seed = 0;
  OutputSpec output;
};

struct Config {
  std::vector<RunSpec> runs;
  int workers = 0;  // 0 = hardware concurrency
  std::string outdir = "out";
  nlohmann::json resolved;  // the fully-resolved JSON this config was built from
};

// Load a JSON config file and apply dotted-path overrides ("a.b.2.c=value";
// values are parsed as JSON where possible, else taken as strings).
Config load_config(const std::string& path, const std::vector<std::string>& overrides = {});
Config config_from_json(nlohmann::json j);

// Rebuild cfg.resolved after mutating cfg (e.g. CLI flag overrides).
void refresh_resolved(Config& cfg);

// SHA-1 of a byte string, lowercase hex; used for the sidecar content hash.
std::string sha1_hex(const std::string& bytes);

// Git-style content hash ("blob <len>\0<bytes>") of the resolved config.
std::string config_hash(const Config& cfg);

nlohmann::json lattice_to_json(const LatticeSpec& lat);
nlohmann::json run_to_json(const RunSpec& run);

}  // namespace dipsim
