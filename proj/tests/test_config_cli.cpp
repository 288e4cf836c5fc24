#include <doctest/doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>
#include <sys/wait.h>

#include "dipsim/commands.hpp"
#include "dipsim/config.hpp"

using namespace dipsim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json minimal_config() {
  return json::parse(R"({
    "seed": 11,
    "workers": 2,
    "outdir": "out",
    "runs": [{
      "name": "a",
      "lattice": {"type": "diamond"},
      "disorder": {"n_spins": 2, "abundance": 0.05, "gamma_over_2pi": 8.47e6},
      "sequence": {"kind": "cpmg", "tau": 3.6e-5, "n_echoes": 4},
      "model": {"type": "delta"},
      "n_dr": 3
    }]
  })");
}

void expect_config_error(json j, const std::string& needle) {
  try {
    config_from_json(std::move(j));
    FAIL_CHECK("expected a config error mentioning: " << needle);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(needle) != std::string::npos);
  }
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "dipsim_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text) {
  fs::path p = dir / name;
  std::ofstream f(p);
  f << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("config: happy path fills defaults") {
  Config cfg = config_from_json(minimal_config());
  REQUIRE(cfg.runs.size() == 1);
  const RunSpec& run = cfg.runs[0];
  CHECK(cfg.workers == 2);
  CHECK(cfg.outdir == "out");
  CHECK(run.name == "a");
  CHECK(run.seed == 11);
  CHECK(run.n_dr == 3);
  CHECK(run.output.csv == "a.csv");
  CHECK(run.output.snapshot_threshold == 0.02);
  CHECK(run.detection == Detection::Total);
  CHECK(run.model.type == ModelSpec::Type::Delta);
  CHECK(run.sequence.build().repeats == 2);
  CHECK(run.lattice.name == "diamond");
  CHECK(run.disorder.selection == SpinSelection::StrongestCoupling);

  // Resolved form re-parses to the same hash (fixed point).
  Config again = config_from_json(cfg.resolved);
  CHECK(config_hash(cfg) == config_hash(again));
}

TEST_CASE("config: diagnostics carry dotted paths") {
  json j = minimal_config();
  j["runs"][0]["disorder"]["bogus"] = 1;
  expect_config_error(j, "runs.0.disorder: unknown key 'bogus'");

  j = minimal_config();
  j["runs"].push_back(j["runs"][0]);
  expect_config_error(j, "duplicate run name 'a'");

  j = minimal_config();
  j["runs"][0]["sequence"] = {{"kind", "dsl"},
                              {"text", "90(X) ; [ d(1us) 180(Y) d(1us) echo(Y) ]*1"},
                              {"tau", 1e-6}};
  expect_config_error(j, "no tau");

  j = minimal_config();
  j["runs"][0]["sequence"] = {{"kind", "dsl"}, {"text", "90(X ; ]*1"}};
  expect_config_error(j, "runs.0.sequence.text");

  j = minimal_config();
  j["runs"][0]["sequence"] = {{"kind", "hahn"}, {"tau", 1e-6}, {"n_echoes", 4}};
  expect_config_error(j, "hahn takes no n_echoes");

  j = minimal_config();
  j["runs"][0]["sequence"]["n_echoes"] = 3;  // two echoes per cycle
  expect_config_error(j, "runs.0.sequence");

  j = minimal_config();
  j["runs"][0]["sequence"]["tau"] = 0.0;
  expect_config_error(j, "tau");

  j = minimal_config();
  j["runs"][0]["model"] = {{"type", "exact_finite"}};
  expect_config_error(j, "runs.0.model");

  j = minimal_config();
  j["runs"][0]["model"] = {{"type", "warp"}};
  expect_config_error(j, "runs.0.model");

  j = minimal_config();
  j["runs"][0]["disorder"].erase("gamma_over_2pi");
  expect_config_error(j, "gamma_over_2pi");

  j = minimal_config();
  j["runs"][0]["detection"] = "sideways";
  expect_config_error(j, "runs.0.detection");

  j = minimal_config();
  j["runs"][0]["n_dr"] = 0;
  expect_config_error(j, "n_dr");

  j = minimal_config();
  j["runs"] = json::array();
  expect_config_error(j, "runs");

  j = minimal_config();
  j["runs"][0]["output"] = {{"snapshot_echoes", {0}}};
  expect_config_error(j, "snapshot_echoes");

  j = minimal_config();
  j["runs"][0]["lattice"] = {{"type", "fcc"}};
  expect_config_error(j, "missing required key 'a'");

  j = minimal_config();
  j["runs"][0]["lattice"] = {{"type", "pyrochlore"}};
  expect_config_error(j, "lattice.type");
}

TEST_CASE("config: tau sweeps and dsl load") {
  json j = minimal_config();
  j["runs"][0]["sequence"] = {{"kind", "hahn"}, {"tau_sweep", {1e-5, 2e-5, 4e-5}}};
  Config cfg = config_from_json(j);
  CHECK(cfg.runs[0].sequence.tau_sweep.size() == 3);
  CHECK(cfg.runs[0].sequence.build_with_tau(2e-5).repeats == 1);

  j = minimal_config();
  j["runs"][0]["sequence"] = {{"kind", "dsl"},
                              {"text", "90(X) ; [ d(2us) 180(Y) d(2us) echo(Y) ]*5"}};
  Config c2 = config_from_json(j);
  CHECK(c2.runs[0].sequence.build().repeats == 5);
}

TEST_CASE("config: file loading and --set overrides") {
  fs::path dir = fresh_dir("overrides");
  fs::path p = write_file(dir, "cfg.json", minimal_config().dump() );

  Config base = load_config(p.string(), {});
  CHECK(base.runs[0].n_dr == 3);

  Config o1 = load_config(p.string(), {"runs.0.n_dr=7", "workers=5"});
  CHECK(o1.runs[0].n_dr == 7);
  CHECK(o1.workers == 5);

  // Unquoted strings fall back to literal text.
  Config o2 = load_config(p.string(), {"runs.0.sequence.kind=apcpmg"});
  CHECK(o2.runs[0].sequence.kind == "apcpmg");

  // Overrides are applied before validation.
  CHECK_THROWS_AS(load_config(p.string(), {"runs.0.n_dr=0"}), ConfigError);
  CHECK_THROWS_AS(load_config(p.string(), {"runs.3.n_dr=1"}), ConfigError);
  CHECK_THROWS_AS(load_config(p.string(), {"nonsense"}), ConfigError);
  CHECK_THROWS_AS(load_config((dir / "missing.json").string(), {}), ConfigError);

  fs::path badj = write_file(dir, "bad.json", "{ not json");
  CHECK_THROWS_AS(load_config(badj.string(), {}), ConfigError);

  // JSON comments are tolerated.
  fs::path withc = write_file(dir, "comments.json",
                              "// run file\n" + minimal_config().dump());
  CHECK_NOTHROW(load_config(withc.string(), {}));

  // CLI-level overrides: --seed reseeds every run, --out moves the tree.
  Config o3 = load_config(p.string(), {});
  CliOverrides cli;
  cli.workers = 9;
  cli.seed = 12345;
  cli.outdir = "elsewhere";
  apply_cli_overrides(o3, cli);
  CHECK(o3.workers == 9);
  CHECK(o3.outdir == "elsewhere");
  CHECK(o3.runs[0].seed == 12345);
  CHECK(o3.resolved["workers"] == 9);
  CHECK(o3.resolved["runs"][0]["seed"] == 12345);
}

TEST_CASE("content hashing") {
  CHECK(sha1_hex("") == "da39a3ee5e6b4b0d3255bfef95601890afd80709");
  CHECK(sha1_hex("abc") == "a9993e364706816aba3e25717850c26c9cd0d89d");

  Config cfg = config_from_json(minimal_config());
  std::string body = cfg.resolved.dump();
  std::string blob = "blob " + std::to_string(body.size());
  blob.push_back('\0');
  blob += body;
  CHECK(config_hash(cfg) == sha1_hex(blob));

  // Hash responds to content, not formatting of the input file.
  json j = minimal_config();
  j["runs"][0]["n_dr"] = 4;
  CHECK(config_hash(config_from_json(j)) != config_hash(cfg));
}

#ifdef DIPSIM_CLI_PATH

namespace {
int run_cli(const std::string& args) {
  std::string cmd = std::string(DIPSIM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}
}  // namespace

TEST_CASE("cli: run writes csv + sidecar and exits 0") {
  fs::path dir = fresh_dir("cli_run");
  fs::path cfg = write_file(dir, "cfg.json", minimal_config().dump());
  fs::path out = dir / "out";
  CHECK(run_cli("run --config " + cfg.string() + " --out " + out.string()) == 0);

  fs::path csv = out / "a.csv";
  REQUIRE(fs::exists(csv));
  std::string text = slurp(csv);
  CHECK(text.rfind("echo_index,time_s,mean,stderr,magnitude_mean\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);  // header + 4 echoes

  fs::path meta = out / "a.csv.meta.json";
  REQUIRE(fs::exists(meta));
  json side = json::parse(slurp(meta));
  CHECK(side["command"] == "run");
  CHECK(side["run"] == "a");
  CHECK(side["master_seed"] == 11);
  CHECK(side["n_dr"] == 3);
  CHECK(side["stderr_definition"] == "sample standard deviation / sqrt(n_dr)");
  std::string h = side["input_hash"];
  CHECK(h.rfind("sha1:", 0) == 0);
  CHECK(h.size() == 5 + 40);
  CHECK(side["config"]["runs"][0]["name"] == "a");
  CHECK(side["seed_derivation"].get<std::string>().find("splitmix64") != std::string::npos);
}

TEST_CASE("cli: deterministic csv across worker counts") {
  fs::path dir = fresh_dir("cli_det");
  fs::path cfg = write_file(dir, "cfg.json", minimal_config().dump());
  CHECK(run_cli("run --config " + cfg.string() + " --workers 1 --out " + (dir / "w1").string()) ==
        0);
  CHECK(run_cli("run --config " + cfg.string() + " --workers 4 --out " + (dir / "w4").string()) ==
        0);
  CHECK(slurp(dir / "w1" / "a.csv") == slurp(dir / "w4" / "a.csv"));
}

TEST_CASE("cli: config problems exit 2, runtime failures exit 3") {
  fs::path dir = fresh_dir("cli_errors");
  CHECK(run_cli("run --config " + (dir / "nope.json").string()) == 2);

  fs::path bad = write_file(dir, "bad.json", "{ this is not json");
  CHECK(run_cli("run --config " + bad.string()) == 2);

  json j = minimal_config();
  j["runs"][0]["n_dr"] = 0;
  fs::path invalid = write_file(dir, "invalid.json", j.dump());
  CHECK(run_cli("run --config " + invalid.string()) == 2);

  // Occupancy cannot ever be satisfied: two sites, four spins.
  j = minimal_config();
  j["runs"][0]["lattice"] = {{"type", "custom"},
                             {"sites", {{0.0, 0.0, 0.0}, {1e-10, 0.0, 0.0}}}};
  j["runs"][0]["disorder"]["n_spins"] = 4;
  j["runs"][0]["disorder"]["radius"] = 1e-9;
  fs::path imposs = write_file(dir, "impossible.json", j.dump());
  CHECK(run_cli("run --config " + imposs.string() + " --out " + (dir / "o3").string()) == 3);

  // Unknown flags and a missing subcommand are usage errors.
  CHECK(run_cli("run --config " + bad.string() + " --frobnicate") == 2);
  CHECK(run_cli("") == 2);
  CHECK(run_cli("--version") == 0);
  CHECK(run_cli("--help") == 0);
}

TEST_CASE("cli: aht reports cycles and rejects non-cyclic ones") {
  fs::path dir = fresh_dir("cli_aht");
  json j = minimal_config();
  j["runs"][0]["model"] = {{"type", "exact_finite"}, {"omega1_over_2pi", 4.0e4}};
  fs::path cfg = write_file(dir, "cfg.json", j.dump());
  fs::path out = dir / "out";
  CHECK(run_cli("aht --config " + cfg.string() + " --out " + out.string()) == 0);
  fs::path report = out / "aht_a.json";
  REQUIRE(fs::exists(report));
  json r = json::parse(slurp(report));
  CHECK(r["span"] == 1);
  CHECK(r["n_spins"] == 2);
  CHECK(r["intervals"].size() > 0);
  CHECK(r["norms"]["hbar0_frobenius_rad_s"].get<double>() > 0);
  CHECK(r["closed_form_residuals"]["hbar0_rel"].get<double>() < 1e-10);
  CHECK(r["closed_form_residuals"]["hbar1_rel"].get<double>() < 1e-6);
  CHECK(r["defect_table"].size() == 4);

  json nc = minimal_config();
  nc["runs"][0]["sequence"] = {{"kind", "dsl"},
                               {"text", "90(X) ; [ d(1us) 120(Y) d(1us) echo(Y) ]*3"}};
  fs::path ncfg = write_file(dir, "noncyclic.json", nc.dump());
  CHECK(run_cli("aht --config " + ncfg.string() + " --out " + (dir / "o2").string()) == 2);
}

TEST_CASE("cli: snapshot writes four rows per echo; empty schedule writes nothing") {
  fs::path dir = fresh_dir("cli_snapshot");
  json j = minimal_config();
  j["runs"][0]["model"] = {{"type", "exact_finite"}, {"omega1_over_2pi", 4.0e4}};
  j["runs"][0]["n_dr"] = 2;
  j["runs"][0]["output"] = {{"snapshot_echoes", {1, 3}}, {"snapshot_dr", 1}};
  fs::path cfg = write_file(dir, "cfg.json", j.dump());
  fs::path out = dir / "out";
  CHECK(run_cli("snapshot --config " + cfg.string() + " --out " + out.string()) == 0);
  for (int echo : {1, 3})
    for (const std::string tag : {"delta", "exact"})
      for (const std::string who : {"dr1", "avg"}) {
        fs::path base = out / ("a_e" + std::to_string(echo) + "_" + tag + "_" + who);
        CHECK(fs::exists(fs::path(base.string() + ".ppm")));
        CHECK(fs::exists(fs::path(base.string() + ".json")));
      }
  json avg = json::parse(slurp(out / "a_e1_exact_avg.json"));
  CHECK(avg["n_averaged"] == 2);
  json one = json::parse(slurp(out / "a_e1_delta_dr1.json"));
  CHECK(one["n_averaged"] == 1);
  CHECK(one["pulses_applied"] == 1);

  // No snapshot schedule: succeed and write nothing.
  fs::path cfg2 = write_file(dir, "plain.json", minimal_config().dump());
  fs::path out2 = dir / "empty";
  CHECK(run_cli("snapshot --config " + cfg2.string() + " --out " + out2.string()) == 0);
  CHECK((!fs::exists(out2) || fs::is_empty(out2)));

  // Delta-model runs have no exact-pulse row to draw: config error.
  json jd = minimal_config();
  jd["runs"][0]["output"] = {{"snapshot_echoes", {1}}};
  fs::path cfg3 = write_file(dir, "delta.json", jd.dump());
  CHECK(run_cli("snapshot --config " + cfg3.string() + " --out " + (dir / "o3").string()) == 2);
}

TEST_CASE("cli: analytic closed form next to the simulated csv") {
  fs::path dir = fresh_dir("cli_analytic");
  fs::path cfg = write_file(dir, "cfg.json", minimal_config().dump());
  fs::path out = dir / "out";
  CHECK(run_cli("analytic --config " + cfg.string() + " --out " + out.string()) == 0);
  fs::path csv = out / "a_analytic.csv";
  REQUIRE(fs::exists(csv));
  std::string text = slurp(csv);
  CHECK(text.rfind("echo_index,time_s,mean,stderr,magnitude_mean\n", 0) == 0);
  CHECK(fs::exists(out / "a_analytic.csv.meta.json"));
}

TEST_CASE("cli: list-presets") {
  fs::path dir = fresh_dir("cli_presets");
  write_file(dir, "alpha.json", R"({"description": "first demo", "runs": []})");
  write_file(dir, "beta.json", R"({"runs": []})");
  write_file(dir, "notes.txt", "ignored");

  std::string cmd = std::string(DIPSIM_CLI_PATH) + " list-presets --dir " + dir.string() +
                    " > " + (dir / "out.txt").string() + " 2>/dev/null";
  int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  CHECK(WEXITSTATUS(rc) == 0);
  std::string out = slurp(dir / "out.txt");
  CHECK(out.find("alpha") != std::string::npos);
  CHECK(out.find("first demo") != std::string::npos);
  CHECK(out.find("beta") != std::string::npos);
  CHECK(out.find("notes") == std::string::npos);

  CHECK(run_cli("list-presets --dir " + (dir / "missing").string()) == 2);
}

#else
TEST_CASE("cli binary path not provided") {
  MESSAGE("DIPSIM_CLI_PATH undefined; CLI end-to-end tests skipped");
}
#endif
