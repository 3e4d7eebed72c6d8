#include "pflow/config.hpp"

#include "pflow/errors.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace pflow {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Entry {
  std::string value;
  int line;
};

class Reader {
public:
  Reader(std::map<std::string, Entry> entries, std::string source)
      : entries_(std::move(entries)), source_(std::move(source)) {}

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return parse_double(entries_.at(key).value, key);
  }

  long integer(const std::string& key, long fallback) const {
    if (!has(key)) return fallback;
    const Entry& e = entries_.at(key);
    long v = 0;
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    const auto [ptr, ec] = std::from_chars(b, end, v);
    if (ec != std::errc() || ptr != end) throw ParseError(source_, e.line, key + ": expected an integer, got '" + e.value + "'");
    return v;
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    return has(key) ? entries_.at(key).value : fallback;
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const Entry& e = entries_.at(key);
    if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
    if (e.value == "false" || e.value == "0" || e.value == "no") return false;
    throw ParseError(source_, e.line, key + ": expected a boolean, got '" + e.value + "'");
  }

  std::vector<double> list(const std::string& key) const {
    if (!has(key)) return {};
    return parse_list(entries_.at(key).value, key);
  }

  std::vector<std::vector<double>> points(const std::string& key) const {
    std::vector<std::vector<double>> out;
    if (!has(key)) return out;
    std::stringstream ss(entries_.at(key).value);
    std::string part;
    while (std::getline(ss, part, ';')) {
      if (!trim(part).empty()) out.push_back(parse_list(part, key));
    }
    return out;
  }

private:
  double parse_double(const std::string& raw, const std::string& key) const {
    const std::string s = trim(raw);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      throw ParseError(source_, entries_.at(key).line, key + ": expected a number, got '" + s + "'");
    }
    return v;
  }

  std::vector<double> parse_list(const std::string& raw, const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(item, key));
    return out;
  }

  std::map<std::string, Entry> entries_;
  std::string source_;
};

const char* const kKnownKeys[] = {
    "grid.n", "grid.sizes", "grid.lengths",
    "target.kind", "target.d", "target.r0",
    "flow.p", "flow.delta", "flow.bigK", "flow.kind",
    "control.cfl_sigma", "control.penalty_sigma", "control.t_end", "control.snapshot_dt", "control.dt",
    "initial.kind", "initial.q", "initial.axis", "initial.mode", "initial.amplitude", "initial.direction",
    "initial.seed", "initial.modes", "initial.center", "initial.scale",
    "diagnostics.energy", "diagnostics.bochner", "diagnostics.w22",
    "phi.centers", "phi.times", "phi.scales", "phi.eps0", "phi.stride", "phi.t_begin", "phi.t_end",
    "sweep.k_list", "detect.radii", "detect.gamma", "output.dir",
};

bool known(const std::string& key) {
  for (const char* k : kKnownKeys) {
    if (key == k) return true;
  }
  return false;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
  std::map<std::string, Entry> entries;
  std::stringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, line_no, "expected 'section.key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.find('.') == std::string::npos) throw ParseError(source, line_no, "key '" + key + "' has no section");
    if (!known(key)) throw ParseError(source, line_no, "unknown key '" + key + "'");
    if (value.empty()) throw ParseError(source, line_no, "empty value for '" + key + "'");
    if (entries.count(key)) throw ParseError(source, line_no, "duplicate key '" + key + "'");
    entries.emplace(key, Entry{value, line_no});
  }
  const Reader r(std::move(entries), source);
  RunConfig cfg;

  // grid
  if (!r.has("grid.sizes")) throw ValidationError("grid.sizes", "is required");
  std::vector<int> sizes;
  for (double v : r.list("grid.sizes")) {
    if (v != static_cast<int>(v)) throw ValidationError("grid.sizes", "entries must be integers");
    sizes.push_back(static_cast<int>(v));
  }
  const int n = static_cast<int>(r.integer("grid.n", static_cast<long>(sizes.size())));
  if (sizes.size() == 1 && n > 1) sizes.assign(static_cast<std::size_t>(n), sizes.front());
  std::vector<double> lengths = r.list("grid.lengths");
  if (lengths.empty()) lengths.assign(static_cast<std::size_t>(n), 1.0);
  if (lengths.size() == 1 && n > 1) lengths.assign(static_cast<std::size_t>(n), lengths.front());
  cfg.grid = GridSpec::make(n, sizes, lengths);

  // target
  const std::string tkind = r.text("target.kind", "sphere");
  const int d = static_cast<int>(r.integer("target.d", 3));
  if (d < 1) throw ValidationError("target.d", "must be >= 1");
  TargetSpec target = TargetSpec::flat(d);
  if (tkind == "sphere") {
    if (d < 2) throw ValidationError("target.d", "must be >= 2 for a sphere");
    const double r0 = r.number("target.r0", 0.5);
    if (!(r0 > 0.0 && r0 < 1.0)) throw ValidationError("target.r0", "must lie in (0, 1)");
    target = TargetSpec::sphere(d, r0);
  } else if (tkind != "flat") {
    throw ValidationError("target.kind", "must be 'flat' or 'sphere', got '" + tkind + "'");
  }

  // flow
  const std::string fkind = r.text("flow.kind", "delta_k");
  FlowKind kind = FlowKind::DeltaKFlow;
  if (fkind == "delta") {
    kind = FlowKind::DeltaFlowProjected;
  } else if (fkind != "delta_k") {
    throw ValidationError("flow.kind", "must be 'delta_k' or 'delta', got '" + fkind + "'");
  }
  cfg.flow = make_params(r.number("flow.p", 2.0), r.number("flow.delta", 0.1), r.number("flow.bigK", 10.0), kind, target);
  cfg.flow.validate();

  // control
  cfg.control.cfl_sigma = r.number("control.cfl_sigma", 0.4);
  cfg.control.penalty_sigma = r.number("control.penalty_sigma", 0.5);
  cfg.control.t_end = r.number("control.t_end", 0.1);
  cfg.control.snapshot_dt = r.number("control.snapshot_dt", 0.01);
  if (r.has("control.dt")) cfg.control.dt_override = r.number("control.dt", 0.0);
  cfg.control.validate();

  // initial data
  const std::string ikind = r.text("initial.kind", "constant");
  InitialSpec& init = cfg.initial;
  if (ikind == "constant") {
    init.kind = InitialKind::Constant;
  } else if (ikind == "fourier") {
    init.kind = InitialKind::Fourier;
  } else if (ikind == "random_smooth") {
    init.kind = InitialKind::RandomSmooth;
  } else if (ikind == "equivariant_degree1") {
    init.kind = InitialKind::EquivariantDegree1;
  } else {
    throw ValidationError("initial.kind", "unknown kind '" + ikind + "'");
  }
  init.q = r.list("initial.q");
  if (init.q.empty()) {
    init.q.assign(static_cast<std::size_t>(d), 0.0);
    if (!target.is_flat()) init.q.back() = 1.0;
  }
  if (init.q.size() != static_cast<std::size_t>(d)) throw ValidationError("initial.q", "must have target.d entries");
  init.axis = static_cast<int>(r.integer("initial.axis", 0));
  if (init.axis < 0 || init.axis >= n) throw ValidationError("initial.axis", "must lie in [0, grid.n)");
  init.mode = static_cast<int>(r.integer("initial.mode", 1));
  init.amplitude = r.number("initial.amplitude", 0.1);
  if (!(init.amplitude >= 0.0)) throw ValidationError("initial.amplitude", "must be >= 0");
  init.direction = r.list("initial.direction");
  if (init.direction.empty()) {
    init.direction.assign(static_cast<std::size_t>(d), 0.0);
    init.direction.front() = 1.0;
  }
  if (init.direction.size() != static_cast<std::size_t>(d)) {
    throw ValidationError("initial.direction", "must have target.d entries");
  }
  const long seed = r.integer("initial.seed", 1);
  if (seed < 0) throw ValidationError("initial.seed", "must be >= 0");
  init.seed = static_cast<std::uint64_t>(seed);
  init.modes = static_cast<int>(r.integer("initial.modes", 4));
  if (init.modes < 1) throw ValidationError("initial.modes", "must be >= 1");
  init.center = r.list("initial.center");
  if (init.center.empty()) {
    for (int a = 0; a < n; ++a) init.center.push_back(0.5 * cfg.grid.length(a));
  }
  if (init.center.size() != static_cast<std::size_t>(n)) throw ValidationError("initial.center", "must have grid.n entries");
  init.scale = r.number("initial.scale", 0.1);
  if (!(init.scale > 0.0)) throw ValidationError("initial.scale", "must be > 0");
  if (init.kind == InitialKind::EquivariantDegree1 && (n != 2 || target.is_flat() || d != 3)) {
    throw ValidationError("initial.kind", "equivariant_degree1 requires grid.n = 2 and a sphere target with d = 3");
  }

  cfg.diagnostics.energy = r.flag("diagnostics.energy", true);
  cfg.diagnostics.bochner = r.flag("diagnostics.bochner", true);
  cfg.diagnostics.w22 = r.flag("diagnostics.w22", true);

  // phi scan
  cfg.phi.centers = r.points("phi.centers");
  for (const auto& c : cfg.phi.centers) {
    if (c.size() != static_cast<std::size_t>(n)) throw ValidationError("phi.centers", "need grid.n entries each");
  }
  cfg.phi.times = r.list("phi.times");
  cfg.phi.scales = r.list("phi.scales");
  for (double s : cfg.phi.scales) {
    if (!(s > 0.0)) throw ValidationError("phi.scales", "must be > 0");
  }
  if (r.has("phi.eps0")) {
    cfg.phi.eps0 = r.number("phi.eps0", 0.0);
    if (!(*cfg.phi.eps0 > 0.0)) throw ValidationError("phi.eps0", "must be > 0");
  }
  cfg.phi.stride = static_cast<int>(r.integer("phi.stride", 1));
  if (cfg.phi.stride < 1) throw ValidationError("phi.stride", "must be >= 1");
  if (r.has("phi.t_begin")) cfg.phi.t_begin = r.number("phi.t_begin", 0.0);
  if (r.has("phi.t_end")) cfg.phi.t_end = r.number("phi.t_end", 0.0);

  if (r.has("sweep.k_list")) cfg.k_list = r.list("sweep.k_list");
  if (cfg.k_list.empty()) throw ValidationError("sweep.k_list", "must not be empty");
  for (double k : cfg.k_list) {
    if (!(k > 0.0)) throw ValidationError("sweep.k_list", "entries must be > 0");
  }
  cfg.radii = r.list("detect.radii");
  for (double rr : cfg.radii) {
    if (!(rr > 0.0)) throw ValidationError("detect.radii", "entries must be > 0");
  }
  cfg.gamma = r.number("detect.gamma", 0.5);
  if (!(cfg.gamma > 0.0)) throw ValidationError("detect.gamma", "must be > 0");
  cfg.output_dir = r.text("output.dir", "out");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

}  // namespace pflow
