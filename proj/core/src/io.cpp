#include "qrm/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qrm/errors.hpp"

namespace qrm {

using json = nlohmann::json;

namespace {

std::string join_path(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Reads one JSON object, mirroring every resolved value (including defaults)
// into `out`; finish() rejects keys that were never read.
class Section {
 public:
  Section(const json& in, json& out, std::string path) : in_(in), out_(out), path_(std::move(path)) {
    if (!in_.is_object()) throw ValidationError("'" + path_ + "' must be an object");
    if (!out_.is_object()) out_ = json::object();
  }

  bool has(const std::string& key) const { return in_.contains(key) && !in_.at(key).is_null(); }

  double number(const std::string& key) {
    const json& v = require(key);
    if (!v.is_number()) throw type_error(key, "a number");
    return set(key, v.get<double>());
  }
  double number(const std::string& key, double def) { return has(key) ? number(key) : (used_.insert(key), set(key, def)); }

  std::optional<double> optional_number(const std::string& key) {
    used_.insert(key);
    if (!has(key)) {
      out_[key] = nullptr;
      return std::nullopt;
    }
    return number(key);
  }

  int integer(const std::string& key) {
    const json& v = require(key);
    if (!v.is_number() || v.get<double>() != std::floor(v.get<double>())) throw type_error(key, "an integer");
    const int value = static_cast<int>(v.get<double>());
    out_[key] = value;
    return value;
  }
  int integer(const std::string& key, int def) {
    if (has(key)) return integer(key);
    used_.insert(key);
    out_[key] = def;
    return def;
  }

  bool boolean(const std::string& key, bool def) {
    used_.insert(key);
    if (!has(key)) {
      out_[key] = def;
      return def;
    }
    const json& v = in_.at(key);
    if (!v.is_boolean()) throw type_error(key, "true or false");
    out_[key] = v.get<bool>();
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const json& v = require(key);
    if (!v.is_string()) throw type_error(key, "a string");
    out_[key] = v.get<std::string>();
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& def) {
    if (has(key)) return string(key);
    used_.insert(key);
    out_[key] = def;
    return def;
  }

  std::vector<double> numbers(const std::string& key) {
    const json& v = require(key);
    if (!v.is_array()) throw type_error(key, "an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw type_error(key, "an array of numbers");
      out.push_back(x.get<double>());
    }
    out_[key] = out;
    return out;
  }

  const json& raw(const std::string& key) { return require(key); }
  json& out(const std::string& key) { return out_[key]; }
  void mark(const std::string& key) { used_.insert(key); }
  std::string full(const std::string& key) const { return join_path(path_, key); }

  void finish() const {
    for (auto it = in_.begin(); it != in_.end(); ++it) {
      if (!used_.count(it.key())) throw ValidationError("unknown key '" + full(it.key()) + "'");
    }
  }

  ValidationError type_error(const std::string& key, const char* expected) const {
    return ValidationError("key '" + full(key) + "' must be " + expected);
  }

 private:
  const json& require(const std::string& key) {
    used_.insert(key);
    if (!has(key)) throw ValidationError("missing required key '" + full(key) + "'");
    return in_.at(key);
  }
  double set(const std::string& key, double v) {
    out_[key] = v;
    return v;
  }

  const json& in_;
  json& out_;
  std::string path_;
  std::set<std::string> used_;
};

// Re-raises library errors with the offending key in the message.
template <class F>
auto keyed(const std::string& key, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConvergenceError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ValidationError("key '" + key + "': " + e.what());
  }
}

SolverMethod solver_from_string(const std::string& s, const std::string& key) {
  if (s == "auto") return SolverMethod::Auto;
  if (s == "dense") return SolverMethod::Dense;
  if (s == "partial") return SolverMethod::Partial;
  throw ValidationError("key '" + key + "' must be one of auto, dense, partial");
}

ModelParams read_model(const json& in, json& out, const std::string& path) {
  Section s(in, out, path);
  ModelParams p;
  p.omega = s.number("omega");
  p.g = s.number("g", 0.0);
  p.omega0 = s.number("omega0", 0.0);
  p.g_eps = s.number("g_eps", 0.0);
  p.g2 = s.number("g2", 0.0);
  const double f = s.number("F");
  p.F = keyed(s.full("F"), [&] { return Spin::from_value(f); });
  p.fock_cutoff = s.integer("fock_cutoff", 32);
  s.finish();
  keyed(path, [&] { p.validate(); });
  return p;
}

LatticeScenario read_lattice(const json& in, json& out, const std::string& path, const SpeciesRegistry& registry) {
  Section s(in, out, path);
  LatticeScenario l;
  const std::string name = s.string("species");
  if (s.has("F")) {
    const double f = s.number("F");
    const Spin F = keyed(s.full("F"), [&] { return Spin::from_value(f); });
    l.config.species = keyed(s.full("species"), [&] { return registry.get(name, F); });
  } else {
    s.mark("F");
    l.config.species = keyed(s.full("F"), [&] { return registry.get(name); });
    s.out("F") = l.config.species.F.value();
  }
  l.config.lambda_t = s.number("lambda_t");
  l.config.lambda_c = s.number("lambda_c");
  l.config.V0 = s.number("V0");
  l.config.Bx = s.number("Bx", 0.0);
  l.config.Bz = s.number("Bz", 0.0);
  l.config.eps = s.number("eps", 0.0);
  l.config.phase = s.number("phase", 0.0);
  const std::string geometry = s.string("configuration");
  l.config.configuration = keyed(s.full("configuration"), [&] { return geometry_from_string(geometry); });
  l.n_points = s.integer("n_points", kDefaultGridPoints);
  s.finish();
  keyed(path, [&] {
    l.config.validate();
    l.grid();
  });
  return l;
}

json merged(const json& base, const json& patch) {
  json out = base.is_object() ? base : json::object();
  if (patch.is_object()) out.merge_patch(patch);
  return out;
}

void set_path(json& root, const std::string& key, json value) {
  json* node = &root;
  std::string rest = key;
  while (true) {
    const auto dot = rest.find('.');
    const std::string head = rest.substr(0, dot);
    if (head.empty()) throw ValidationError("malformed key '" + key + "'");
    json& child = [&]() -> json& {
      if (node->is_array()) {
        std::size_t idx = 0;
        try {
          idx = std::stoul(head);
        } catch (const std::exception&) {
          throw ValidationError("key '" + key + "': '" + head + "' is not an array index");
        }
        if (idx >= node->size()) throw ValidationError("key '" + key + "': index " + head + " out of range");
        return (*node)[idx];
      }
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) throw ValidationError("key '" + key + "' descends into a non-object value");
      return (*node)[head];
    }();
    if (dot == std::string::npos) {
      child = std::move(value);
      return;
    }
    node = &child;
    rest = rest.substr(dot + 1);
  }
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

void apply_assignment(json& root, std::string_view line, const std::string& where) {
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) throw ValidationError(where + ": expected key=value, got '" + std::string(line) + "'");
  const std::string key = trim(line.substr(0, eq));
  const std::string text = trim(line.substr(eq + 1));
  if (key.empty()) throw ValidationError(where + ": empty key");
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  set_path(root, key, std::move(value));
}

json parse_text(std::string_view text) {
  const std::string body = trim(text);
  if (body.empty()) return json::object();
  if (body.front() == '{') {
    try {
      return json::parse(body);
    } catch (const json::exception& e) {
      throw ValidationError(std::string("scenario is not valid JSON: ") + e.what());
    }
  }
  json root = json::object();
  std::istringstream lines{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(lines, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    apply_assignment(root, line, "scenario line " + std::to_string(number));
  }
  return root;
}

// A base section with per-use overrides applied: {"model": {...}} or
// {"lattice": {...}} inside a segment or initial-state block.
SegmentHamiltonian read_hamiltonian(Section& s, const std::string& path, const Scenario& sc, const json& root_in,
                                    const SpeciesRegistry& registry) {
  if (s.has("lattice")) {
    if (!sc.lattice) throw ValidationError("missing required key 'lattice' (used by " + path + ")");
    s.mark("lattice");
    const LatticeScenario l =
        read_lattice(merged(root_in.at("lattice"), s.raw("lattice")), s.out("lattice"), path + ".lattice", registry);
    return LatticeSegment{l.config, l.grid()};
  }
  s.mark("model");
  if (!sc.model) {
    if (sc.lattice && !s.has("model")) {
      s.out("lattice") = json::object();
      const LatticeScenario l = read_lattice(root_in.at("lattice"), s.out("lattice"), path + ".lattice", registry);
      return LatticeSegment{l.config, l.grid()};
    }
    throw ValidationError("missing required key 'model' (used by " + path + ")");
  }
  const json patch = s.has("model") ? s.raw("model") : json::object();
  return read_model(merged(root_in.at("model"), patch), s.out("model"), path + ".model");
}

InitialState read_initial(const json& in, json& out, const std::string& path, const Scenario& sc,
                          const json& root_in, const SpeciesRegistry& registry) {
  Section s(in, out, path);
  const std::string type = s.string("type");
  if (type == "fock") {
    FockSpinState st;
    st.n = s.integer("n", 0);
    st.spin_index = s.integer("spin_index");
    s.finish();
    return st;
  }
  if (type == "coherent") {
    CoherentState st;
    st.alpha = cplx(s.number("alpha_re", 0.0), s.number("alpha_im", 0.0));
    st.spin_index = s.integer("spin_index");
    s.finish();
    return st;
  }
  if (type == "ground") {
    // Ground state of the base Hamiltonian with optional overrides.
    GroundState st{read_hamiltonian(s, path, sc, root_in, registry)};
    s.finish();
    return st;
  }
  throw ValidationError("key '" + s.full("type") + "' must be one of fock, coherent, ground");
}

void read_evolve(const json& in, json& out, Scenario& sc, const json& root_in, const SpeciesRegistry& registry) {
  Section s(in, out, "evolve");
  EvolveSettings& ev = sc.evolve;
  const std::string mode = s.string("mode", "protocol");
  if (mode == "ramp") {
    ev.mode = EvolveMode::Ramp;
    if (!sc.model) throw ValidationError("missing required key 'model' (evolve.mode = ramp)");
    s.mark("ramp_to");
    const json patch = s.has("ramp_to") ? s.raw("ramp_to") : json::object();
    ev.ramp_to = read_model(merged(root_in.at("model"), patch), s.out("ramp_to"), "evolve.ramp_to");
    ev.total_time = s.number("total_time");
    ev.n_steps = s.integer("n_steps", 100);
    s.finish();
    return;
  }
  if (mode != "protocol") throw ValidationError("key 'evolve.mode' must be protocol or ramp");
  ev.mode = EvolveMode::Protocol;
  ev.sample_rate = s.number("sample_rate");
  const json& segs = s.raw("segments");
  if (!segs.is_array() || segs.empty()) throw ValidationError("key 'evolve.segments' must be a non-empty array");
  json& segs_out = s.out("segments");
  segs_out = json::array();
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const std::string path = "evolve.segments." + std::to_string(k);
    segs_out.push_back(json::object());
    Section seg(segs[k], segs_out.back(), path);
    Segment segment;
    segment.duration = seg.number("duration");
    segment.hamiltonian = read_hamiltonian(seg, path, sc, root_in, registry);
    seg.finish();
    ev.protocol.segments.push_back(std::move(segment));
  }
  const json& init = s.raw("initial");
  ev.protocol.initial = read_initial(init, s.out("initial"), "evolve.initial", sc, root_in, registry);
  s.finish();
}

std::set<std::string> sections_for(Command c) {
  switch (c) {
    case Command::Params:
      return {"lattice"};
    case Command::Spectrum:
      return {"model", "spectrum"};
    case Command::LatticeSpectrum:
      return {"lattice", "spectrum"};
    case Command::Compare:
      return {"lattice", "compare"};
    case Command::Sweep:
      return {"lattice", "compare", "sweep"};
    case Command::Evolve:
      return {"model", "lattice", "evolve"};
  }
  return {};
}

Scenario resolve(const json& root_in, Command command) {
  if (!root_in.is_object()) throw ValidationError("scenario must be an object");
  Scenario sc;
  sc.command = command;
  json root_out = json::object();
  Section root(root_in, root_out, "");

  const std::string cmd = root.string("command", std::string(to_string(command)));
  if (cmd != to_string(command)) {
    throw ValidationError("key 'command' is '" + cmd + "' but the command line asks for '" +
                          std::string(to_string(command)) + "'");
  }
  sc.output = root.string("output", "qrm_" + std::string(to_string(command)));
  const std::string fmt = root.string("format", "csv");
  sc.format = keyed("format", [&] { return format_from_string(fmt); });
  if (root.has("dump_matrix")) {
    sc.dump_matrix = root.string("dump_matrix");
  } else {
    root.mark("dump_matrix");
    root_out["dump_matrix"] = nullptr;
  }

  SpeciesRegistry registry = SpeciesRegistry::builtin();
  if (root.has("species_file")) {
    registry = load_species_registry(root.string("species_file"));
  } else {
    root.mark("species_file");
    root_out["species_file"] = nullptr;
  }

  const std::set<std::string> wanted = sections_for(command);
  const bool evolve = command == Command::Evolve;

  if (wanted.count("model") && (!evolve || root.has("model"))) {
    root.mark("model");
    if (!root.has("model")) throw ValidationError("missing required key 'model'");
    sc.model = read_model(root.raw("model"), root.out("model"), "model");
  }
  if (wanted.count("lattice") && (!evolve || root.has("lattice"))) {
    root.mark("lattice");
    if (!root.has("lattice")) throw ValidationError("missing required key 'lattice'");
    sc.lattice = read_lattice(root.raw("lattice"), root.out("lattice"), "lattice", registry);
  }
  if (evolve && !sc.model && !sc.lattice) throw ValidationError("missing required key 'model'");

  if (wanted.count("spectrum")) {
    root.mark("spectrum");
    const json in = root.has("spectrum") ? root.raw("spectrum") : json::object();
    Section s(in, root.out("spectrum"), "spectrum");
    sc.spectrum.n_states = s.integer("n_states", 10);
    sc.spectrum.converge_cutoff = s.boolean("converge_cutoff", false);
    sc.spectrum.cutoff_tol = s.number("cutoff_tol", 1e-10);
    sc.spectrum.method = solver_from_string(s.string("solver", "auto"), "spectrum.solver");
    s.finish();
    if (sc.spectrum.n_states < 1) throw ValidationError("key 'spectrum.n_states' must be >= 1");
  }
  if (wanted.count("compare")) {
    root.mark("compare");
    const json in = root.has("compare") ? root.raw("compare") : json::object();
    Section s(in, root.out("compare"), "compare");
    ComparisonOptions& o = sc.compare.options;
    o.n_states = s.integer("n_states", 30);
    o.margin = s.integer("margin", 6);
    o.cluster_gap = s.number("cluster_gap", 1e-6);
    o.cutoff_tol = s.number("cutoff_tol", 1e-9);
    o.method = solver_from_string(s.string("solver", "auto"), "compare.solver");
    o.threads = s.integer("threads", 0);
    o.n_points = sc.lattice->n_points;
    if (command == Command::Compare) {
      sc.compare.ratio = s.optional_number("ratio");
      sc.compare.resonance = s.boolean("resonance", true);
    }
    s.finish();
    if (o.n_states < 2) throw ValidationError("key 'compare.n_states' must be >= 2");
    if (o.margin < 0) throw ValidationError("key 'compare.margin' must be >= 0");
  }
  if (wanted.count("sweep")) {
    root.mark("sweep");
    if (!root.has("sweep")) throw ValidationError("missing required key 'sweep'");
    Section s(root.raw("sweep"), root.out("sweep"), "sweep");
    sc.sweep.ratios = s.numbers("ratios");
    sc.sweep.depths = s.numbers("depths");
    sc.sweep.Bz = s.optional_number("Bz");
    s.finish();
  }
  if (evolve) {
    root.mark("evolve");
    if (!root.has("evolve")) throw ValidationError("missing required key 'evolve'");
    read_evolve(root.raw("evolve"), root.out("evolve"), sc, root_in, registry);
  }
  root.finish();
  sc.canonical = root_out.dump(2) + "\n";
  return sc;
}

// ---- output -------------------------------------------------------------

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

json number_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_file(const std::string& path, const std::string& content) {
  std::error_code ec;
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << content;
  f.flush();
  if (!f) throw IoError("failed writing '" + path + "'");
}

bool want_csv(const Scenario& s) { return s.format != OutputFormat::Json; }
bool want_json(const Scenario& s) { return s.format != OutputFormat::Csv; }

json scenario_json(const Scenario& s) { return json::parse(s.canonical); }

std::string row(std::initializer_list<std::string> cells) {
  std::string out;
  bool first = true;
  for (const auto& c : cells) {
    if (!first) out += ',';
    out += c;
    first = false;
  }
  return out + "\n";
}

json report_json(const ComparisonReport& r) {
  json j;
  j["ok"] = r.ok;
  j["error"] = r.error;
  j["target_ratio"] = number_json(r.target_ratio);
  j["V0"] = number_json(r.config.V0);
  j["Bx"] = number_json(r.config.Bx);
  j["Bz"] = number_json(r.config.Bz);
  j["n_states"] = r.n_states;
  j["n_points"] = r.n_points;
  j["delta_E_bar"] = number_json(r.delta_E_bar);
  j["infidelity_bar"] = number_json(r.infidelity_bar);
  j["energy_terms"] = r.energy_terms;
  j["energy_excluded"] = r.energy_excluded;
  j["effective"] = {{"omega_eff", number_json(r.effective.omega_eff)},
                    {"g_eff", number_json(r.effective.g_eff)},
                    {"x_star", number_json(r.effective.x_star)},
                    {"x0_eff", number_json(r.effective.x0_eff)},
                    {"curvature", number_json(r.effective.curvature)},
                    {"branch", number_json(r.effective.branch)},
                    {"g_sign", r.effective.g_sign}};
  j["model"] = {{"omega", number_json(r.model.omega)},   {"g", number_json(r.model.g)},
                {"omega0", number_json(r.model.omega0)}, {"g_eps", number_json(r.model.g_eps)},
                {"F", r.model.F.value()},                {"fock_cutoff", r.model.fock_cutoff},
                {"cutoff_change", number_json(r.cutoff_change)}};
  json pairs = json::array();
  for (const auto& p : r.pairs) {
    pairs.push_back({{"e_th", number_json(p.e_th)},
                     {"e_exp", number_json(p.e_exp)},
                     {"overlap2", number_json(p.overlap2)},
                     {"infidelity", number_json(p.infidelity)},
                     {"cluster", p.cluster},
                     {"energy_excluded", p.energy_excluded}});
  }
  j["pairs"] = std::move(pairs);
  return j;
}

}  // namespace

std::string_view to_string(Command c) {
  switch (c) {
    case Command::Params:
      return "params";
    case Command::Spectrum:
      return "spectrum";
    case Command::LatticeSpectrum:
      return "lattice-spectrum";
    case Command::Compare:
      return "compare";
    case Command::Sweep:
      return "sweep";
    case Command::Evolve:
      return "evolve";
  }
  return "?";
}

Command command_from_string(std::string_view name) {
  for (auto c : {Command::Params, Command::Spectrum, Command::LatticeSpectrum, Command::Compare, Command::Sweep,
                 Command::Evolve}) {
    if (name == to_string(c)) return c;
  }
  throw ValidationError("unknown command '" + std::string(name) + "'");
}

std::string_view to_string(OutputFormat f) {
  switch (f) {
    case OutputFormat::Csv:
      return "csv";
    case OutputFormat::Json:
      return "json";
    case OutputFormat::Both:
      return "both";
  }
  return "?";
}

OutputFormat format_from_string(std::string_view name) {
  if (name == "csv") return OutputFormat::Csv;
  if (name == "json") return OutputFormat::Json;
  if (name == "both") return OutputFormat::Both;
  throw ValidationError("unknown output format '" + std::string(name) + "' (expected csv, json or both)");
}

Scenario parse_scenario_text(std::string_view text, Command command, const std::vector<std::string>& overrides) {
  json root = parse_text(text);
  if (!root.is_object()) throw ValidationError("scenario must be a JSON object");
  for (const auto& o : overrides) apply_assignment(root, o, "--set");
  return resolve(root, command);
}

Scenario parse_scenario(const std::string& path, Command command, const std::vector<std::string>& overrides) {
  std::string text;
  if (!path.empty()) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read scenario file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    text = ss.str();
  }
  return parse_scenario_text(text, command, overrides);
}

std::string scenario_key_help() {
  return R"(Scenario keys (JSON object or flat `section.key = value` lines; --set key=value overrides):
  command            params | spectrum | lattice-spectrum | compare | sweep | evolve (must match the subcommand)
  output             output path prefix                         [qrm_<command>]
  format             csv | json | both                          [csv]
  dump_matrix        binary matrix dump path                    [none]
  species_file       species registry JSON                      [built-in]
  model.omega        mode frequency (rad/s)                     required
  model.g            linear coupling (rad/s, signed)            [0]
  model.omega0       spin splitting (rad/s, signed)             [0]
  model.g_eps        drive term on F_x (rad/s)                  [0]
  model.g2           quadratic coupling (rad/s)                 [0]
  model.F            spin, 0.5 .. 3                             required
  model.fock_cutoff  Fock levels kept                           [32]
  lattice.species    registry name (Rb87, Rb85, Li6)            required
  lattice.F          hyperfine spin                             [unique F of species]
  lattice.lambda_t   trapping wavelength (m)                    required
  lattice.lambda_c   coupling wavelength (m)                    required
  lattice.V0         trap depth (units of E_r)                  required
  lattice.Bx         fictitious field amplitude (T)             [0]
  lattice.Bz         bias field (T)                             [0]
  lattice.eps        homogeneous x field (T)                    [0]
  lattice.phase      coupling-lattice phase (rad)               [0]
  lattice.configuration  LinThetaLin | TwoLattice2to1 | TwoLattice3to2   required
  lattice.n_points   grid points per site (power of two >= 128) [2048]
  spectrum.n_states  eigenpairs reported                        [10]
  spectrum.converge_cutoff  grow model.fock_cutoff until converged [false]
  spectrum.cutoff_tol       relative tolerance for that search     [1e-10]
  spectrum.solver    auto | dense | partial                      [auto]
  compare.n_states   compared states                            [30]
  compare.margin     extra states computed on both sides        [6]
  compare.cluster_gap  relative degeneracy threshold            [1e-6]
  compare.cutoff_tol   reference-model cutoff tolerance         [1e-9]
  compare.solver     auto | dense | partial                     [auto]
  compare.threads    sweep worker threads, 0 = all cores        [0]
  compare.ratio      tune lattice.Bx to this g_eff/omega_eff    [none]
  compare.resonance  with ratio: set Bz so omega0 = omega_eff   [true]
  sweep.ratios       g_eff/omega_eff values                     required
  sweep.depths       V0 values (E_r)                            required
  sweep.Bz           fixed bias field (T); none = resonance     [none]
  evolve.mode        protocol | ramp                            [protocol]
  evolve.sample_rate samples per unit time (protocol)           required
  evolve.segments    [{duration, model: {...} | lattice: {...}}], entries override the base section
  evolve.initial     {type: fock, n, spin_index} | {type: coherent, alpha_re, alpha_im, spin_index}
                     | {type: ground, model: {...} | lattice: {...}} (overrides of the base section)
  evolve.ramp_to     model overrides for the ramp end point (ramp)
  evolve.total_time  ramp duration (ramp)                       required
  evolve.n_steps     piecewise-constant ramp steps (ramp)       [100]
)";
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> emit_comparison(const std::vector<ComparisonReport>& reports, const Scenario& scenario) {
  std::vector<std::string> written;
  const std::string& prefix = scenario.output;
  if (want_csv(scenario)) {
    std::string states = row({"V0", "ratio", "n", "e_th", "e_exp", "overlap2", "infidelity", "cluster", "energy_excluded"});
    std::string summary = row({"V0", "ratio", "delta_E_bar", "infidelity_bar", "omega_eff", "g_eff", "Bx", "Bz",
                               "fock_cutoff", "energy_terms", "ok", "error"});
    for (const auto& r : reports) {
      const double ratio = r.target_ratio;
      for (std::size_t n = 0; n < r.pairs.size(); ++n) {
        const auto& p = r.pairs[n];
        states += row({format_double(r.config.V0), format_double(ratio), std::to_string(n), format_double(p.e_th),
                       format_double(p.e_exp), format_double(p.overlap2), format_double(p.infidelity),
                       std::to_string(p.cluster), p.energy_excluded ? "1" : "0"});
      }
      summary += row({format_double(r.config.V0), format_double(ratio), format_double(r.delta_E_bar),
                      format_double(r.infidelity_bar), format_double(r.effective.omega_eff),
                      format_double(r.effective.g_eff), format_double(r.config.Bx), format_double(r.config.Bz),
                      std::to_string(r.model.fock_cutoff), std::to_string(r.energy_terms), r.ok ? "1" : "0",
                      csv_quote(r.error)});
    }
    write_file(prefix + ".csv", states);
    write_file(prefix + "_summary.csv", summary);
    written.push_back(prefix + ".csv");
    written.push_back(prefix + "_summary.csv");
  }
  if (want_json(scenario)) {
    json j;
    j["scenario"] = scenario_json(scenario);
    json arr = json::array();
    for (const auto& r : reports) arr.push_back(report_json(r));
    j["reports"] = std::move(arr);
    write_file(prefix + ".json", j.dump(2) + "\n");
    written.push_back(prefix + ".json");
  }
  return written;
}

std::vector<std::string> emit_evolution(const EvolutionResult& result, const Scenario& scenario) {
  std::vector<std::string> written;
  const std::string& prefix = scenario.output;
  const Index d = result.populations.cols();
  const Index m = result.motional.cols();
  if (want_csv(scenario)) {
    std::string out = "t,norm,fidelity,parity,energy";
    for (Index s = 0; s < d; ++s) out += ",pop_" + std::to_string(s);
    for (Index n = 0; n < m; ++n) out += ",fock_" + std::to_string(n);
    out += "\n";
    for (std::size_t k = 0; k < result.times.size(); ++k) {
      const Index i = static_cast<Index>(k);
      out += format_double(result.times[k]) + "," + format_double(result.norm[k]) + "," +
             format_double(result.fidelity[k]) + "," + format_double(result.parity[k]) + "," +
             format_double(result.energy[k]);
      for (Index s = 0; s < d; ++s) out += "," + format_double(result.populations(i, s));
      for (Index n = 0; n < m; ++n) out += "," + format_double(result.motional(i, n));
      out += "\n";
    }
    write_file(prefix + ".csv", out);
    written.push_back(prefix + ".csv");
  }
  if (want_json(scenario)) {
    json j;
    j["scenario"] = scenario_json(scenario);
    j["times"] = result.times;
    j["norm"] = result.norm;
    j["fidelity"] = result.fidelity;
    j["parity"] = result.parity;
    j["energy"] = result.energy;
    json pops = json::array();
    for (Index i = 0; i < result.populations.rows(); ++i) {
      json rowj = json::array();
      for (Index s = 0; s < d; ++s) rowj.push_back(number_json(result.populations(i, s)));
      pops.push_back(std::move(rowj));
    }
    j["populations"] = std::move(pops);
    json mot = json::array();
    for (Index i = 0; i < result.motional.rows(); ++i) {
      json rowj = json::array();
      for (Index n = 0; n < m; ++n) rowj.push_back(number_json(result.motional(i, n)));
      mot.push_back(std::move(rowj));
    }
    j["motional"] = std::move(mot);
    write_file(prefix + ".json", j.dump(2) + "\n");
    written.push_back(prefix + ".json");
  }
  return written;
}

namespace {

void write_table(const Scenario& sc, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows, const json& extra, std::vector<std::string>& written,
                 const std::string& suffix = "") {
  const std::string base = sc.output + suffix;
  if (want_csv(sc)) {
    std::string out;
    for (std::size_t c = 0; c < header.size(); ++c) out += (c ? "," : "") + header[c];
    out += "\n";
    for (const auto& r : rows) {
      for (std::size_t c = 0; c < r.size(); ++c) out += (c ? "," : "") + format_double(r[c]);
      out += "\n";
    }
    write_file(base + ".csv", out);
    written.push_back(base + ".csv");
  }
  if (want_json(sc)) {
    json j;
    j["scenario"] = scenario_json(sc);
    json table = json::array();
    for (const auto& r : rows) {
      json o;
      for (std::size_t c = 0; c < header.size(); ++c) o[header[c]] = number_json(r[c]);
      table.push_back(std::move(o));
    }
    j["rows"] = std::move(table);
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    write_file(base + ".json", j.dump(2) + "\n");
    written.push_back(base + ".json");
  }
}

double expect_parity(const BasisSpec& basis, const Eigen::VectorXcd& v) {
  double p = 0.0;
  const int d = basis.F.dim();
  for (int n = 0; n < basis.fock_cutoff; ++n)
    for (int s = 0; s < d; ++s) p += (((n + s) % 2 == 0) ? 1.0 : -1.0) * std::norm(v(basis.index(n, s)));
  return p;
}

void maybe_dump(const Scenario& sc, const OperatorMatrix& h, std::vector<std::string>& written) {
  if (!sc.dump_matrix) return;
  write_matrix_dump(*sc.dump_matrix, h);
  written.push_back(*sc.dump_matrix);
}

}  // namespace

std::vector<std::string> run_scenario(const Scenario& sc, std::ostream& log) {
  std::vector<std::string> written;
  switch (sc.command) {
    case Command::Params: {
      const LatticeConfig& c = sc.lattice->config;
      if (sc.dump_matrix) maybe_dump(sc, build_lattice_hamiltonian(c, sc.lattice->grid()), written);
      const double er = c.recoil_energy();
      const double w = trap_frequency(c.V0, er);
      const double x0 = oscillator_length(w, c.species);
      const double bx = gradient_from_amplitude(c.Bx, c.lambda_c);
      const SignedRate g = coupling_strength(bx, c.species.gF, x0);
      const SignedRate w0 = tls_frequency(c.Bz, c.species.gF);
      std::vector<std::pair<std::string, double>> q = {
          {"recoil_energy_J", er},
          {"recoil_frequency_Hz", er / constants::h},
          {"omega_rad_s", w},
          {"omega_over_2pi_Hz", w / (2 * constants::pi)},
          {"x0_m", x0},
          {"bx_T_per_m", bx},
          {"g_rad_s", g.signed_value()},
          {"g_over_2pi_Hz", g.signed_value() / (2 * constants::pi)},
          {"omega0_rad_s", w0.signed_value()},
          {"omega0_over_2pi_Hz", w0.signed_value() / (2 * constants::pi)},
      };
      const EffectiveParams e = extract_effective_params(c);
      q.insert(q.end(), {{"omega_eff_rad_s", e.omega_eff},
                         {"omega_eff_over_2pi_Hz", e.omega_eff / (2 * constants::pi)},
                         {"g_eff_rad_s", e.g_eff},
                         {"g_eff_over_2pi_Hz", e.g_eff / (2 * constants::pi)},
                         {"g_eff_over_omega_eff", e.ratio()},
                         {"x_star_m", e.x_star},
                         {"x0_eff_m", e.x0_eff},
                         {"curvature_J_per_m2", e.curvature},
                         {"branch_mF", e.branch},
                         {"g_sign", static_cast<double>(e.g_sign)},
                         {"resonant_Bz_T", field_for_tls_frequency(e.omega_eff, c.species.gF)}});
      if (want_csv(sc)) {
        std::string out = "quantity,value\n";
        for (const auto& [k, v] : q) out += k + "," + format_double(v) + "\n";
        write_file(sc.output + ".csv", out);
        written.push_back(sc.output + ".csv");
      }
      if (want_json(sc)) {
        json j;
        j["scenario"] = scenario_json(sc);
        for (const auto& [k, v] : q) j["results"][k] = number_json(v);
        write_file(sc.output + ".json", j.dump(2) + "\n");
        written.push_back(sc.output + ".json");
      }
      log << "omega/2pi = " << format_double(w / (2 * constants::pi)) << " Hz, omega_eff/2pi = "
          << format_double(e.omega_eff / (2 * constants::pi)) << " Hz, g_eff/2pi = "
          << format_double(e.g_eff / (2 * constants::pi)) << " Hz\n";
      break;
    }
    case Command::Spectrum: {
      ModelParams p = *sc.model;
      double change = 0.0;
      if (sc.spectrum.converge_cutoff) {
        const CutoffResult r = check_cutoff_convergence(p, sc.spectrum.n_states, sc.spectrum.cutoff_tol);
        p = r.params;
        change = r.max_rel_change;
      }
      const QuadraticModel qm{build_generalized(p), beyond_spectral_collapse(p)};
      maybe_dump(sc, qm.hamiltonian, written);
      if (sc.spectrum.n_states > qm.hamiltonian.dim()) {
        throw ValidationError("key 'spectrum.n_states' exceeds the Hilbert-space dimension");
      }
      EigenOptions opt;
      opt.count = sc.spectrum.n_states;
      opt.method = sc.spectrum.method == SolverMethod::Partial ? SolverMethod::Dense : sc.spectrum.method;
      const Spectrum s = hermitian_eigensolve(qm.hamiltonian, opt);
      const auto clusters = s.clusters();
      std::vector<double> cluster_of(static_cast<std::size_t>(s.size()));
      for (std::size_t c = 0; c < clusters.size(); ++c)
        for (Index i : clusters[c]) cluster_of[static_cast<std::size_t>(i)] = static_cast<double>(c);
      std::vector<std::vector<double>> rows;
      for (Index i = 0; i < s.size(); ++i) {
        rows.push_back({static_cast<double>(i), s.energies(i), s.energies(i) - s.energies(0),
                        expect_parity(p.basis(), s.states.col(i)), cluster_of[static_cast<std::size_t>(i)]});
      }
      json extra;
      extra["fock_cutoff"] = p.fock_cutoff;
      extra["cutoff_change"] = number_json(change);
      extra["beyond_collapse"] = qm.beyond_collapse;
      extra["max_residual"] = number_json(s.max_residual());
      write_table(sc, {"index", "energy", "excitation", "parity", "cluster"}, rows, extra, written);
      log << "lowest energy " << format_double(s.energies(0)) << " (cutoff " << p.fock_cutoff << ")"
          << (qm.beyond_collapse ? ", beyond spectral collapse" : "") << "\n";
      break;
    }
    case Command::LatticeSpectrum: {
      const LatticeScenario& l = *sc.lattice;
      const Grid grid = l.grid();
      if (sc.dump_matrix) maybe_dump(sc, build_lattice_hamiltonian(l.config, grid), written);
      const LatticeSpectrum s = lattice_spectrum(l.config, grid, sc.spectrum.n_states, sc.spectrum.method);
      const Eigen::VectorXd w = s.angular_energies();
      std::vector<std::vector<double>> rows;
      for (Index i = 0; i < w.size(); ++i) {
        rows.push_back({static_cast<double>(i), s.spectrum.energies(i), w(i), w(i) - w(0)});
      }
      json extra;
      extra["recoil_energy_J"] = number_json(s.recoil_energy);
      extra["max_residual"] = number_json(s.spectrum.max_residual());
      write_table(sc, {"index", "energy_Er", "energy_rad_s", "excitation_rad_s"}, rows, extra, written);
      log << "lowest energy " << format_double(s.spectrum.energies(0)) << " E_r\n";
      break;
    }
    case Command::Compare: {
      LatticeConfig c = sc.lattice->config;
      if (sc.compare.ratio) {
        c.Bx = amplitude_for_target_ratio(c, *sc.compare.ratio);
        if (sc.compare.resonance) c.Bz = field_for_tls_frequency(extract_effective_params(c).omega_eff, c.species.gF);
      }
      if (sc.dump_matrix) maybe_dump(sc, build_lattice_hamiltonian(c, Grid::site(c, sc.lattice->n_points)), written);
      ComparisonReport r = compare_point(c, sc.compare.options);
      r.target_ratio = sc.compare.ratio.value_or(r.effective.ratio());
      const auto files = emit_comparison({r}, sc);
      written.insert(written.end(), files.begin(), files.end());
      log << "delta_E_bar = " << format_double(r.delta_E_bar) << ", infidelity_bar = "
          << format_double(r.infidelity_bar) << "\n";
      break;
    }
    case Command::Sweep: {
      if (sc.dump_matrix) throw ValidationError("--dump-matrix is not available for sweep");
      SweepSpec spec;
      spec.base = sc.lattice->config;
      spec.ratios = sc.sweep.ratios;
      spec.depths = sc.sweep.depths;
      spec.Bz = sc.sweep.Bz;
      const auto reports = sweep(spec, sc.compare.options);
      const auto files = emit_comparison(reports, sc);
      written.insert(written.end(), files.begin(), files.end());
      int failed = 0;
      for (const auto& r : reports) failed += r.ok ? 0 : 1;
      log << reports.size() << " sweep points, " << failed << " failed\n";
      break;
    }
    case Command::Evolve: {
      if (sc.evolve.mode == EvolveMode::Ramp) {
        if (sc.dump_matrix) maybe_dump(sc, build_generalized(*sc.model), written);
        const RampResult r = adiabatic_ramp(*sc.model, sc.evolve.ramp_to, sc.evolve.total_time, sc.evolve.n_steps);
        auto files = emit_evolution(r.evolution, sc);
        written.insert(written.end(), files.begin(), files.end());
        json extra;
        extra["final_overlap"] = number_json(r.final_overlap);
        extra["spin_entropy"] = number_json(r.spin_entropy);
        write_table(sc, {"final_overlap", "spin_entropy"}, {{r.final_overlap, r.spin_entropy}}, extra, written,
                    "_summary");
        log << "final ground-state overlap " << format_double(r.final_overlap) << ", spin entropy "
            << format_double(r.spin_entropy) << "\n";
      } else {
        if (sc.dump_matrix) {
          const auto& h0 = sc.evolve.protocol.segments.front().hamiltonian;
          if (const auto* p = std::get_if<ModelParams>(&h0)) {
            maybe_dump(sc, build_generalized(*p), written);
          } else {
            const auto& l = std::get<LatticeSegment>(h0);
            maybe_dump(sc, build_lattice_hamiltonian(l.config, l.grid), written);
          }
        }
        const EvolutionResult r = run_protocol(sc.evolve.protocol, sc.evolve.sample_rate);
        const auto files = emit_evolution(r, sc);
        written.insert(written.end(), files.begin(), files.end());
        log << r.times.size() << " samples, final fidelity " << format_double(r.fidelity.back()) << "\n";
      }
      break;
    }
  }
  return written;
}

}  // namespace qrm
