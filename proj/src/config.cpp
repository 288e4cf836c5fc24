#include "dipsim/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "sha1.hpp"

namespace dipsim {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& msg) {
  throw ConfigError(path.empty() ? msg : path + ": " + msg);
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& path) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key)) bad(path, "unknown key '" + key + "'");
  }
}

const json* find(const json& j, const std::string& key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) bad(path, "expected a number");
  return j.get<double>();
}

double req_number(const json& j, const std::string& key, const std::string& path) {
  const json* v = find(j, key);
  if (!v) bad(path, "missing required key '" + key + "'");
  return get_number(*v, path + "." + key);
}

double opt_number(const json& j, const std::string& key, double dflt, const std::string& path) {
  const json* v = find(j, key);
  return v ? get_number(*v, path + "." + key) : dflt;
}

int opt_int(const json& j, const std::string& key, int dflt, const std::string& path) {
  const json* v = find(j, key);
  if (!v) return dflt;
  if (!v->is_number_integer()) bad(path + "." + key, "expected an integer");
  return v->get<int>();
}

std::string opt_string(const json& j, const std::string& key, const std::string& dflt,
                       const std::string& path) {
  const json* v = find(j, key);
  if (!v) return dflt;
  if (!v->is_string()) bad(path + "." + key, "expected a string");
  return v->get<std::string>();
}

bool opt_bool(const json& j, const std::string& key, bool dflt, const std::string& path) {
  const json* v = find(j, key);
  if (!v) return dflt;
  if (!v->is_boolean()) bad(path + "." + key, "expected a boolean");
  return v->get<bool>();
}

Eigen::Vector3d parse_vec3(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) bad(path, "expected an array of 3 numbers");
  return {get_number(j[0], path), get_number(j[1], path), get_number(j[2], path)};
}

LatticeSpec parse_lattice(const json& j, const std::string& path) {
  if (!j.is_object()) bad(path, "expected an object");
  check_keys(j, {"type", "a", "lattice_vectors", "basis", "sites"}, path);
  std::string type = opt_string(j, "type", "", path);
  if (type == "diamond") {
    return LatticeSpec::diamond(opt_number(j, "a", 5.431e-10, path));
  }
  if (type == "fcc") {
    return LatticeSpec::fcc(req_number(j, "a", path));
  }
  if (type == "custom") {
    const json* sites = find(j, "sites");
    const json* vecs = find(j, "lattice_vectors");
    if (sites && vecs) bad(path, "give either 'sites' or 'lattice_vectors', not both");
    if (sites) {
      if (!sites->is_array() || sites->empty()) bad(path + ".sites", "expected a non-empty array");
      std::vector<Eigen::Vector3d> s;
      for (std::size_t i = 0; i < sites->size(); ++i)
        s.push_back(parse_vec3((*sites)[i], path + ".sites." + std::to_string(i)));
      return LatticeSpec::custom_sites(std::move(s));
    }
    if (!vecs) bad(path, "custom lattice needs 'sites' or 'lattice_vectors' + 'basis'");
    if (!vecs->is_array() || vecs->size() != 3)
      bad(path + ".lattice_vectors", "expected 3 row vectors");
    Eigen::Matrix3d cell;
    for (int r = 0; r < 3; ++r)
      cell.col(r) = parse_vec3((*vecs)[r], path + ".lattice_vectors." + std::to_string(r));
    const json* basis = find(j, "basis");
    if (!basis || !basis->is_array() || basis->empty())
      bad(path, "custom lattice needs a non-empty fractional 'basis'");
    std::vector<Eigen::Vector3d> b;
    for (std::size_t i = 0; i < basis->size(); ++i)
      b.push_back(parse_vec3((*basis)[i], path + ".basis." + std::to_string(i)));
    try {
      return LatticeSpec::custom_cell(cell, std::move(b));
    } catch (const std::invalid_argument& e) {
      bad(path, e.what());
    }
  }
  bad(path + ".type", "expected one of diamond, fcc, custom");
}

DisorderConfig parse_disorder(const json& j, const std::string& path) {
  if (!j.is_object()) bad(path, "expected an object");
  check_keys(j,
             {"n_spins", "abundance", "gamma_over_2pi", "gamma_scale", "offset_fwhm", "radius",
              "selection"},
             path);
  DisorderConfig d;
  d.n_spins = opt_int(j, "n_spins", d.n_spins, path);
  d.abundance = opt_number(j, "abundance", d.abundance, path);
  d.gamma_over_2pi = req_number(j, "gamma_over_2pi", path);
  d.gamma_scale = opt_number(j, "gamma_scale", d.gamma_scale, path);
  d.offset_fwhm = opt_number(j, "offset_fwhm", d.offset_fwhm, path);
  d.radius = opt_number(j, "radius", d.radius, path);
  std::string sel = opt_string(j, "selection", "strongest", path);
  if (sel == "strongest")
    d.selection = SpinSelection::StrongestCoupling;
  else if (sel == "nearest")
    d.selection = SpinSelection::NearestDistance;
  else
    bad(path + ".selection", "expected 'strongest' or 'nearest'");
  try {
    d.validate();
  } catch (const std::invalid_argument& e) {
    bad(path, e.what());
  }
  return d;
}

SequenceSpec parse_sequence_spec(const json& j, const std::string& path) {
  if (!j.is_object()) bad(path, "expected an object");
  check_keys(j, {"kind", "tau", "n_echoes", "bb1", "text", "tau_sweep"}, path);
  SequenceSpec s;
  s.kind = opt_string(j, "kind", "", path);
  s.tau = opt_number(j, "tau", 0.0, path);
  s.n_echoes = opt_int(j, "n_echoes", 0, path);
  s.bb1 = opt_bool(j, "bb1", false, path);
  s.text = opt_string(j, "text", "", path);
  if (const json* sw = find(j, "tau_sweep")) {
    if (!sw->is_array() || sw->empty()) bad(path + ".tau_sweep", "expected a non-empty array");
    for (std::size_t i = 0; i < sw->size(); ++i) {
      double t = get_number((*sw)[i], path + ".tau_sweep." + std::to_string(i));
      if (!(t > 0)) bad(path + ".tau_sweep", "values must be positive");
      s.tau_sweep.push_back(t);
    }
  }

  static const std::set<std::string> kinds = {"hahn", "cp", "apcp", "cpmg", "apcpmg", "ow", "dsl"};
  if (!kinds.count(s.kind)) bad(path + ".kind", "unknown sequence kind '" + s.kind + "'");
  if (s.kind == "dsl") {
    if (s.text.empty()) bad(path, "dsl sequences need 'text'");
    if (!s.tau_sweep.empty() || s.tau != 0 || s.n_echoes != 0)
      bad(path, "dsl sequences take no tau/n_echoes parameters");
  } else {
    if (!s.text.empty()) bad(path, "'text' is only for kind 'dsl'");
    if (s.tau_sweep.empty() && !(s.tau > 0)) bad(path, "needs tau > 0 (or tau_sweep)");
    if (s.kind != "hahn" && s.n_echoes < 1) bad(path, "needs n_echoes >= 1");
    if (s.kind == "hahn" && s.n_echoes != 0) bad(path, "hahn takes no n_echoes");
  }

  // Build once now so malformed recipes fail at load time with context.
  try {
    s.build_with_tau(s.tau_sweep.empty() ? s.tau : s.tau_sweep.front());
  } catch (const SequenceParseError& e) {
    bad(path + ".text", e.what());
  } catch (const std::invalid_argument& e) {
    bad(path, e.what());
  }
  return s;
}

ModelSpec parse_model(const json& j, const std::string& path) {
  if (!j.is_object()) bad(path, "expected an object");
  check_keys(j, {"type", "omega1_over_2pi"}, path);
  std::string type = opt_string(j, "type", "", path);
  double f1 = opt_number(j, "omega1_over_2pi", 0.0, path);
  try {
    return ModelSpec::from_name(type, f1);
  } catch (const std::invalid_argument& e) {
    bad(path, e.what());
  }
}

OutputSpec parse_output(const json& j, const std::string& path) {
  if (!j.is_object()) bad(path, "expected an object");
  check_keys(j, {"csv", "snapshot_echoes", "snapshot_dr", "snapshot_threshold"}, path);
  OutputSpec o;
  o.csv = opt_string(j, "csv", "", path);
  if (const json* se = find(j, "snapshot_echoes")) {
    if (!se->is_array()) bad(path + ".snapshot_echoes", "expected an array");
    for (const auto& v : *se) {
      if (!v.is_number_integer() || v.get<int>() < 1)
        bad(path + ".snapshot_echoes", "echo indices must be integers >= 1");
      o.snapshot_echoes.push_back(v.get<int>());
    }
  }
  o.snapshot_dr = opt_int(j, "snapshot_dr", 0, path);
  if (o.snapshot_dr < 0) bad(path + ".snapshot_dr", "must be >= 0");
  o.snapshot_threshold = opt_number(j, "snapshot_threshold", 0.02, path);
  if (!(o.snapshot_threshold >= 0 && o.snapshot_threshold <= 1))
    bad(path + ".snapshot_threshold", "must be in [0, 1]");
  return o;
}

}  // namespace

Sequence SequenceSpec::build_with_tau(double tau_value) const {
  Sequence seq;
  if (kind == "hahn")
    seq = hahn(tau_value);
  else if (kind == "cp")
    seq = cp(tau_value, n_echoes);
  else if (kind == "apcp")
    seq = apcp(tau_value, n_echoes);
  else if (kind == "cpmg")
    seq = cpmg(tau_value, n_echoes);
  else if (kind == "apcpmg")
    seq = apcpmg(tau_value, n_echoes);
  else if (kind == "ow")
    seq = ostroff_waugh(tau_value, n_echoes);
  else if (kind == "dsl")
    seq = parse_sequence(text);
  else
    throw std::invalid_argument("unknown sequence kind '" + kind + "'");
  if (bb1) seq = with_bb1(seq);
  return seq;
}

Config config_from_json(json j) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  check_keys(j, {"description", "workers", "outdir", "seed", "runs"}, "");

  Config cfg;
  cfg.workers = opt_int(j, "workers", 0, "");
  if (cfg.workers < 0) bad("workers", "must be >= 0");
  cfg.outdir = opt_string(j, "outdir", "out", "");
  double dflt_seed = opt_number(j, "seed", 1.0, "");
  if (dflt_seed < 0) bad("seed", "must be >= 0");

  const json* runs = find(j, "runs");
  if (!runs || !runs->is_array() || runs->empty())
    throw ConfigError("config needs a non-empty 'runs' array");

  std::set<std::string> names;
  for (std::size_t i = 0; i < runs->size(); ++i) {
    const json& rj = (*runs)[i];
    std::string path = "runs." + std::to_string(i);
    if (!rj.is_object()) bad(path, "expected an object");
    check_keys(rj,
               {"name", "lattice", "disorder", "sequence", "model", "detection", "n_dr", "seed",
                "output"},
               path);
    RunSpec run;
    run.name = opt_string(rj, "name", "run" + std::to_string(i), path);
    if (!names.insert(run.name).second) bad(path + ".name", "duplicate run name '" + run.name + "'");
    const json* lj = find(rj, "lattice");
    if (!lj) bad(path, "missing 'lattice'");
    run.lattice = parse_lattice(*lj, path + ".lattice");
    const json* dj = find(rj, "disorder");
    if (!dj) bad(path, "missing 'disorder'");
    run.disorder = parse_disorder(*dj, path + ".disorder");
    const json* sj = find(rj, "sequence");
    if (!sj) bad(path, "missing 'sequence'");
    run.sequence = parse_sequence_spec(*sj, path + ".sequence");
    const json* mj = find(rj, "model");
    if (!mj) bad(path, "missing 'model'");
    run.model = parse_model(*mj, path + ".model");
    std::string det = opt_string(rj, "detection", "total", path);
    try {
      run.detection = detection_from_name(det);
    } catch (const std::invalid_argument& e) {
      bad(path + ".detection", e.what());
    }
    run.n_dr = opt_int(rj, "n_dr", 1, path);
    if (run.n_dr < 1) bad(path + ".n_dr", "must be >= 1");
    double seed = opt_number(rj, "seed", dflt_seed, path);
    if (seed < 0) bad(path + ".seed", "must be >= 0");
    run.seed = static_cast<std::uint64_t>(seed);
    if (const json* oj = find(rj, "output"))
      run.output = parse_output(*oj, path + ".output");
    if (run.output.csv.empty()) run.output.csv = run.name + ".csv";
    cfg.runs.push_back(std::move(run));
  }

  refresh_resolved(cfg);
  return cfg;
}

// Re-emit the resolved form (defaults filled in) for sidecars and hashing.
void refresh_resolved(Config& cfg) {
  json out;
  out["workers"] = cfg.workers;
  out["outdir"] = cfg.outdir;
  json jruns = json::array();
  for (const auto& r : cfg.runs) jruns.push_back(run_to_json(r));
  out["runs"] = std::move(jruns);
  cfg.resolved = std::move(out);
}

nlohmann::json lattice_to_json(const LatticeSpec& lat) {
  json j;
  if (lat.name == "diamond" || lat.name == "fcc") {
    j["type"] = lat.name;
    j["a"] = lat.cell(0, 0);
    return j;
  }
  j["type"] = "custom";
  if (!lat.sites.empty()) {
    json sites = json::array();
    for (const auto& s : lat.sites) sites.push_back({s.x(), s.y(), s.z()});
    j["sites"] = std::move(sites);
    return j;
  }
  json vecs = json::array();
  for (int r = 0; r < 3; ++r) {
    Eigen::Vector3d v = lat.cell.col(r);
    vecs.push_back({v.x(), v.y(), v.z()});
  }
  j["lattice_vectors"] = std::move(vecs);
  json basis = json::array();
  for (const auto& b : lat.basis) basis.push_back({b.x(), b.y(), b.z()});
  j["basis"] = std::move(basis);
  return j;
}

nlohmann::json run_to_json(const RunSpec& run) {
  json j;
  j["name"] = run.name;
  j["lattice"] = lattice_to_json(run.lattice);
  json d;
  d["n_spins"] = run.disorder.n_spins;
  d["abundance"] = run.disorder.abundance;
  d["gamma_over_2pi"] = run.disorder.gamma_over_2pi;
  d["gamma_scale"] = run.disorder.gamma_scale;
  d["offset_fwhm"] = run.disorder.offset_fwhm;
  d["radius"] = run.disorder.radius;
  d["selection"] =
      run.disorder.selection == SpinSelection::StrongestCoupling ? "strongest" : "nearest";
  j["disorder"] = std::move(d);
  json s;
  s["kind"] = run.sequence.kind;
  if (run.sequence.kind == "dsl") {
    s["text"] = run.sequence.text;
  } else {
    if (run.sequence.tau_sweep.empty())
      s["tau"] = run.sequence.tau;
    else
      s["tau_sweep"] = run.sequence.tau_sweep;
    if (run.sequence.kind != "hahn") s["n_echoes"] = run.sequence.n_echoes;
  }
  s["bb1"] = run.sequence.bb1;
  j["sequence"] = std::move(s);
  json m;
  m["type"] = run.model.name();
  if (run.model.type != ModelSpec::Type::Delta)
    m["omega1_over_2pi"] = run.model.omega1_over_2pi;
  j["model"] = std::move(m);
  j["detection"] = detection_name(run.detection);
  j["n_dr"] = run.n_dr;
  j["seed"] = run.seed;
  json o;
  o["csv"] = run.output.csv;
  o["snapshot_echoes"] = run.output.snapshot_echoes;
  o["snapshot_dr"] = run.output.snapshot_dr;
  o["snapshot_threshold"] = run.output.snapshot_threshold;
  j["output"] = std::move(o);
  return j;
}

namespace {

json parse_override_value(const std::string& text) {
  json v = json::parse(text, nullptr, false);
  if (v.is_discarded()) return json(text);
  return v;
}

void apply_override(json& root, const std::string& expr) {
  auto eq = expr.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("--set needs the form path.to.key=value: " + expr);
  std::string path = expr.substr(0, eq);
  json value = parse_override_value(expr.substr(eq + 1));

  json* cur = &root;
  std::size_t start = 0;
  std::vector<std::string> tokens;
  while (start <= path.size()) {
    auto dot = path.find('.', start);
    if (dot == std::string::npos) dot = path.size();
    tokens.push_back(path.substr(start, dot - start));
    start = dot + 1;
  }
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const std::string& tok = tokens[t];
    if (tok.empty()) throw ConfigError("--set path has an empty segment: " + expr);
    bool last = t + 1 == tokens.size();
    bool numeric = tok.find_first_not_of("0123456789") == std::string::npos;
    if (cur->is_array()) {
      if (!numeric) throw ConfigError("--set: '" + tok + "' indexes an array in " + expr);
      std::size_t idx = std::stoul(tok);
      if (idx >= cur->size()) throw ConfigError("--set: index " + tok + " out of range in " + expr);
      cur = &(*cur)[idx];
    } else if (cur->is_object() || cur->is_null()) {
      if (cur->is_null()) *cur = json::object();
      cur = &(*cur)[tok];
    } else {
      throw ConfigError("--set: cannot descend into a scalar at '" + tok + "' in " + expr);
    }
    if (last) *cur = value;
  }
}

}  // namespace

Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  json j = json::parse(ss.str(), nullptr, false, /*ignore_comments=*/true);
  if (j.is_discarded()) throw ConfigError("invalid JSON in " + path);
  for (const auto& ov : overrides) apply_override(j, ov);
  return config_from_json(std::move(j));
}

std::string sha1_hex(const std::string& bytes) {
  detail::Sha1 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string config_hash(const Config& cfg) {
  std::string body = cfg.resolved.dump();
  std::string blob = "blob " + std::to_string(body.size());
  blob.push_back('\0');
  blob += body;
  return sha1_hex(blob);
}

}  // namespace dipsim
