#include "pflow/harness.hpp"

#include "pflow/diagnostics.hpp"
#include "pflow/errors.hpp"
#include "pflow/flow.hpp"
#include "pflow/initial_data.hpp"
#include "pflow/monotonicity.hpp"
#include "pflow/series_io.hpp"
#include "pflow/snapshot_io.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace fs = std::filesystem;

namespace pflow {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Context {
  const RunConfig& cfg;
  const HarnessOptions& options;
  std::ostream& log;
  fs::path out;
  std::vector<Assertion> checks;

  void check(Assertion a) {
    const char* tag = a.passed ? "PASS" : (a.warning ? "WARN" : "FAIL");
    log << tag << " " << a.module << "/" << a.operation << " " << a.property << ": measured " << a.measured
        << ", expected " << a.expected << "\n";
    checks.push_back(std::move(a));
  }

  int exit_code() const {
    for (const auto& a : checks) {
      if (!a.passed && (!a.warning || options.strict)) return 1;
    }
    return 0;
  }
};

fs::path history_dir(const Context& ctx) { return ctx.out / "history"; }

FieldHistory fresh_run(const RunConfig& cfg) { return run(make_initial(cfg), cfg.flow, cfg.control); }

// eps0 from small smooth data with the same target point and flow
double reference_eps0(const RunConfig& cfg, const FlowParams& flow, const StepControl& control,
                      const std::vector<double>& scales, const ScanWindow& window) {
  RunConfig ref = cfg;
  ref.flow = flow;
  ref.control = control;
  ref.initial = InitialSpec{};
  ref.initial.kind = InitialKind::RandomSmooth;
  ref.initial.q = cfg.initial.q;
  ref.initial.amplitude = 0.02;
  ref.initial.modes = 2;
  return calibrate_eps0(fresh_run(ref), scales, window);
}

// up to three dyadic scales from the resolvable minimum
std::vector<double> detect_scales(const GridSpec& g, double dt, double span) {
  auto scales = dyadic_scales(min_scan_scale(g, dt), std::min(max_valid_scale(g), span));
  if (scales.size() > 3) scales.resize(3);
  return scales;
}

void check_blowup(Context& ctx, const FieldHistory& h) {
  if (h.blowup_time) {
    ctx.check({"flow_stepper", "run", "no blow-up", false, true,
               "non-finite values at t=" + num(*h.blowup_time), "finite run to t_end"});
  }
}

void check_energy_monotone(Context& ctx, const std::vector<DiagnosticsRecord>& rec) {
  double rise = 0.0;
  for (std::size_t i = 1; i < rec.size(); ++i) rise += std::max(0.0, rec[i].total_energy - rec[i - 1].total_energy);
  const double e0 = rec.front().total_energy;
  const double decay = e0 - rec.back().total_energy;
  const double allowed = 1e-2 * std::max(decay, 0.0) + 1e-12 * std::abs(e0);
  ctx.check({"diagnostics", "total_energy", "energy non-increasing", rise <= allowed,
             false, "cumulative rise " + num(rise), "<= " + num(allowed)});
}

FieldHistory obtain_history(Context& ctx) {
  const fs::path dir = history_dir(ctx);
  if (fs::exists(dir / "index.json")) {
    ctx.log << "loading history from " << dir.string() << "\n";
    return load_history(dir.string(), ctx.cfg.flow);
  }
  FieldHistory h = fresh_run(ctx.cfg);
  save_history(h, dir.string());
  check_blowup(ctx, h);
  return h;
}

constexpr double kFdFraction = 0.05;

double dt_scale(const FieldHistory& h) {
  if (h.step_dts.empty()) return 0.0;
  return *std::max_element(h.step_dts.begin(), h.step_dts.end());
}

int cmd_run(Context& ctx) {
  FieldHistory h = fresh_run(ctx.cfg);
  save_history(h, history_dir(ctx).string());
  check_blowup(ctx, h);
  const auto rec = diagnostics_series(h, ctx.cfg.diagnostics.bochner, ctx.cfg.diagnostics.w22);
  export_series(rec, {}, ctx.out.string());
  if (ctx.cfg.diagnostics.energy) check_energy_monotone(ctx, rec);
  nlohmann::json j;
  j["snapshots"] = h.snapshots.size();
  j["steps"] = h.step_dts.size();
  j["t_end"] = h.t_end();
  j["initial_energy"] = rec.front().total_energy;
  j["final_energy"] = rec.back().total_energy;
  if (h.blowup_time) j["blowup_time"] = *h.blowup_time;
  write_text((ctx.out / "run.json").string(), j.dump(2));
  ctx.log << "run: " << h.snapshots.size() << " snapshots, E " << num(rec.front().total_energy) << " -> "
          << num(rec.back().total_energy) << "\n";
  return ctx.exit_code();
}

int cmd_diagnose(Context& ctx) {
  const fs::path dir = history_dir(ctx);
  if (!fs::exists(dir / "index.json")) throw IoError("no stored history in '" + dir.string() + "'; run 'run' first");
  const FieldHistory h = load_history(dir.string(), ctx.cfg.flow);
  const auto rec = diagnostics_series(h, ctx.cfg.diagnostics.bochner, ctx.cfg.diagnostics.w22);
  export_series(rec, {}, ctx.out.string());
  if (ctx.cfg.diagnostics.energy) check_energy_monotone(ctx, rec);
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < h.snapshots.size(); ++i) {
    worst = std::max(worst, dissipation_residual(h, h.snapshots[i].time));
  }
  ctx.log << "diagnose: max dissipation residual " << num(worst) << "\n";
  return ctx.exit_code();
}

std::vector<double> scan_scales(const RunConfig& cfg, const FieldHistory& h, double t) {
  if (!cfg.phi.scales.empty()) return cfg.phi.scales;
  const GridSpec& g = h.snapshots.front().grid;
  const double lo = min_scan_scale(g, dt_scale(h));
  // leave room for the finite-difference probe at (1 + kFdFraction) s
  const double hi = std::min(max_valid_scale(g), t - h.t_begin()) / (1.0 + kFdFraction);
  return lo <= hi ? dyadic_scales(lo, hi) : std::vector<double>{};
}

std::vector<std::vector<double>> scan_centers(const RunConfig& cfg) {
  if (!cfg.phi.centers.empty()) return cfg.phi.centers;
  return {std::vector<double>(static_cast<std::size_t>(cfg.grid.dim()), 0.0)};
}

int cmd_phi(Context& ctx) {
  const FieldHistory h = obtain_history(ctx);
  const GridSpec& g = h.snapshots.front().grid;
  const double p = ctx.cfg.flow.p;
  const double h2 = g.min_spacing() * g.min_spacing();
  const double dt = dt_scale(h);
  std::vector<double> times = ctx.cfg.phi.times;
  if (times.empty()) times.push_back(h.t_end());
  std::vector<PhiSample> samples;
  double worst_drop = 0.0;
  double worst_allowed = 0.0;
  bool monotone = true;
  double min_exact = std::numeric_limits<double>::infinity();
  for (double t : times) {
    const auto scales = scan_scales(ctx.cfg, h, t);
    for (const auto& x : scan_centers(ctx.cfg)) {
      const SpacetimePoint z{t, x};
      const std::size_t first = samples.size();
      for (double s : scales) samples.push_back(phi_sample(h, z, s, kFdFraction));
      for (std::size_t i = first + 1; i < samples.size(); ++i) {
        const double drop = samples[i - 1].value - samples[i].value;
        const double allowed = samples[i].tail_bound + 10.0 * (h2 + dt) * std::pow(samples[i].s, 0.5 * p);
        if (drop > allowed) monotone = false;
        if (drop - allowed > worst_drop - worst_allowed) {
          worst_drop = drop;
          worst_allowed = allowed;
        }
      }
      for (std::size_t i = first; i < samples.size(); ++i) min_exact = std::min(min_exact, samples[i].exact_derivative);
    }
  }
  if (samples.empty()) throw DomainError("phi: no admissible scales for the requested times");
  export_series(diagnostics_series(h, false, false), samples, ctx.out.string());
  ctx.check({"monotonicity", "phi", "non-decreasing in s", monotone, false,
             "largest drop " + num(worst_drop), "<= tail + 10(h^2+dt)s^{p/2} = " + num(worst_allowed)});
  ctx.check({"monotonicity", "phi_derivative_exact", "non-negative", min_exact >= 0.0, false,
             "min " + num(min_exact), ">= 0"});
  return ctx.exit_code();
}

int cmd_sweep(Context& ctx) {
  const SweepResult res = sweep_k(ctx.cfg, true);
  std::string csv = "K,sup_k2_dist2,sup_k_dist,sup_grad,l2_to_delta_flow\n";
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  bool decreasing = true;
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    const SweepRow& r = res.rows[i];
    char line[256];
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g\n", r.k, r.sup_k2_dist2, r.sup_k_dist, r.sup_grad,
                  r.l2_to_delta_flow);
    csv += line;
    lo = std::min(lo, r.sup_k2_dist2);
    hi = std::max(hi, r.sup_k2_dist2);
    if (i > 0 && !(r.l2_to_delta_flow < res.rows[i - 1].l2_to_delta_flow)) decreasing = false;
    ctx.log << "K=" << num(r.k) << " sup K^2 dist^2=" << num(r.sup_k2_dist2) << " sup K dist=" << num(r.sup_k_dist)
            << " sup|grad u|=" << num(r.sup_grad) << " L2 to delta-flow=" << num(r.l2_to_delta_flow) << "\n";
  }
  write_text((ctx.out / "sweep_k.csv").string(), csv);
  const double variation = lo > 0.0 ? hi / lo - 1.0 : std::numeric_limits<double>::infinity();
  ctx.check({"cli_harness", "sweep-k", "L2 distance to the delta-flow decreasing in K", decreasing, false,
             decreasing ? "monotone" : "not monotone", "strictly decreasing"});
  const double last = res.rows.back().l2_to_delta_flow;
  ctx.check({"cli_harness", "sweep-k", "largest-K distance within 3x scheme error", last <= 3.0 * res.scheme_error,
             false, num(last), "<= 3 * " + num(res.scheme_error)});
  ctx.check({"cli_harness", "sweep-k", "sup K^2 dist^2 K-stable", variation < 0.5, false,
             "max/min - 1 = " + num(variation), "< 0.5"});
  ctx.log << "sweep-k: eps0 " << num(res.eps0) << ", " << res.witness_points << " unflagged final-time points\n";
  const bool consistent =
      res.witness_points > 0 && std::isfinite(res.witness_sup) && res.witness_variation < 0.2;
  ctx.check({"concentration", "flag_concentration", "regular points keep a K-stable gradient bound", consistent, false,
             std::to_string(res.witness_points) + " points, sup " + num(res.witness_sup) + ", max/min - 1 = " +
                 num(res.witness_variation),
             "finite and < 0.2"});
  return ctx.exit_code();
}

int cmd_detect(Context& ctx) {
  const FieldHistory h = obtain_history(ctx);
  const GridSpec& g = h.snapshots.front().grid;
  const double dt = dt_scale(h);
  std::vector<double> scales = ctx.cfg.phi.scales;
  if (scales.empty()) scales = detect_scales(g, dt, h.t_end() - h.t_begin());
  if (scales.empty()) throw DomainError("detect: history too short for any admissible scale");
  const double smax = *std::max_element(scales.begin(), scales.end());
  ScanWindow window{ctx.cfg.phi.t_begin.value_or(h.t_begin() + smax), ctx.cfg.phi.t_end.value_or(h.t_end()),
                    ctx.cfg.phi.stride};
  double eps0 = 0.0;
  if (ctx.cfg.phi.eps0) {
    eps0 = *ctx.cfg.phi.eps0;
  } else {
    eps0 = reference_eps0(ctx.cfg, ctx.cfg.flow, ctx.cfg.control, scales, window);
    ctx.log << "detect: eps0 calibrated to " << num(eps0) << "\n";
  }
  ConcentrationReport report;
  report.eps0 = eps0;
  report.flags = flag_concentration(h, eps0, scales, window);
  report.blowup_time = h.blowup_time;
  std::vector<double> radii = ctx.cfg.radii;
  if (radii.empty()) {
    const double r0 = 2.0 * std::max(g.min_spacing(), std::sqrt(dt));
    radii = {r0, 2.0 * r0, 4.0 * r0};
  }
  std::vector<double> lengths;
  for (int a = 0; a < g.dim(); ++a) lengths.push_back(g.length(a));
  bool disjoint = true;
  for (double r : radii) {
    PackingResult pk = minkowski_content(report.flags, r, ctx.cfg.flow.p, g.dim(), lengths);
    for (std::size_t i = 0; i < pk.centers.size(); ++i)
      for (std::size_t j = i + 1; j < pk.centers.size(); ++j)
        if (parabolic_distance(pk.centers[i], pk.centers[j], lengths) < 2.0 * r) disjoint = false;
    ctx.log << "detect: r=" << num(r) << " N=" << pk.count << " estimate=" << num(pk.estimate) << "\n";
    report.packings.push_back(std::move(pk));
  }
  write_text((ctx.out / "concentration.json").string(), report.to_json());
  ctx.log << "detect: " << report.flags.size() << " flagged points\n";
  ctx.check({"concentration", "minkowski_content", "packing balls disjoint", disjoint, false,
             disjoint ? "disjoint" : "overlap found", "pairwise d_P >= 2r"});
  return ctx.exit_code();
}

nlohmann::json summarize_csv(const fs::path& path) {
  std::ifstream in(path);
  std::string header, line, last;
  std::getline(in, header);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rows;
    last = line;
  }
  nlohmann::json j;
  j["rows"] = rows;
  std::vector<std::string> cols;
  std::stringstream hs(header);
  for (std::string c; std::getline(hs, c, ',');) cols.push_back(c);
  nlohmann::json lastj;
  std::stringstream ls(last);
  std::size_t i = 0;
  for (std::string v; std::getline(ls, v, ',') && i < cols.size(); ++i) lastj[cols[i]] = std::strtod(v.c_str(), nullptr);
  j["last"] = lastj;
  return j;
}

int cmd_report(Context& ctx) {
  nlohmann::json rep;
  bool any = false;
  for (const char* name : {"energy.csv", "phi.csv", "sweep_k.csv"}) {
    const fs::path p = ctx.out / name;
    if (fs::exists(p)) {
      rep[name] = summarize_csv(p);
      any = true;
    }
  }
  for (const char* name : {"concentration.json", "run.json"}) {
    const fs::path p = ctx.out / name;
    if (fs::exists(p)) {
      std::ifstream in(p);
      rep[name] = nlohmann::json::parse(in);
      any = true;
    }
  }
  if (!any) throw IoError("report: nothing to aggregate in '" + ctx.out.string() + "'");
  write_text((ctx.out / "report.json").string(), rep.dump(2));
  ctx.log << "report: wrote " << (ctx.out / "report.json").string() << "\n";
  return ctx.exit_code();
}

}  // namespace

double l2_distance(const FieldMap& coarse, const FieldMap& fine) {
  const GridSpec& gc = coarse.grid;
  const GridSpec& gf = fine.grid;
  if (coarse.d != fine.d || gc.dim() != gf.dim()) throw DomainError("l2_distance: incompatible fields");
  std::array<int, kMaxDim> ratio{1, 1, 1};
  for (int a = 0; a < gc.dim(); ++a) {
    if (gc.length(a) != gf.length(a) || gf.size(a) % gc.size(a) != 0) {
      throw DomainError("l2_distance: fine grid is not a refinement of the coarse grid");
    }
    ratio[static_cast<std::size_t>(a)] = gf.size(a) / gc.size(a);
  }
  double s = 0.0;
  for (std::size_t c = 0; c < gc.cell_count(); ++c) {
    std::array<int, kMaxDim> idx{0, 0, 0};
    for (int a = 0; a < gc.dim(); ++a) idx[static_cast<std::size_t>(a)] = gc.coord(c, a) * ratio[static_cast<std::size_t>(a)];
    const auto u = coarse.at(c);
    const auto v = fine.at(gf.linear(idx));
    for (std::size_t k = 0; k < u.size(); ++k) s += (u[k] - v[k]) * (u[k] - v[k]);
  }
  return std::sqrt(s * gc.cell_volume());
}

SweepResult sweep_k(const RunConfig& cfg, bool with_scheme_error) {
  if (cfg.flow.target.is_flat()) throw DomainError("sweep_k: needs a curved target");
  const FieldMap initial = make_initial(cfg);
  const double kmax = *std::max_element(cfg.k_list.begin(), cfg.k_list.end());
  FlowParams top = cfg.flow;
  top.kind = FlowKind::DeltaKFlow;
  top.big_k = kmax;
  SweepResult res;
  res.common_dt = cfg.control.dt_override.value_or(stable_dt(top, cfg.grid, cfg.control));
  StepControl control = cfg.control;
  control.dt_override = res.common_dt;
  control.snapshot_dt = cfg.control.snapshot_dt > 0.0 ? cfg.control.snapshot_dt : control.t_end / 100.0;

  FlowParams proj = cfg.flow;
  proj.kind = FlowKind::DeltaFlowProjected;
  const FieldHistory ref = run(initial, proj, control);
  if (ref.blowup_time) throw BlowupDetected(*ref.blowup_time, ref.blowup_cell.value_or(0));

  const std::vector<double> scales =
      cfg.phi.scales.empty() ? detect_scales(cfg.grid, res.common_dt, control.t_end) : cfg.phi.scales;
  if (scales.empty()) throw DomainError("sweep_k: run too short for any admissible scale");
  const ScanWindow window{control.t_end, control.t_end, cfg.phi.stride};
  res.eps0 = cfg.phi.eps0 ? *cfg.phi.eps0 : reference_eps0(cfg, proj, control, scales, window);
  // cylinder sup per final-time position, one map per K
  std::vector<std::map<std::vector<double>, double>> sups;

  for (double k : cfg.k_list) {
    FlowParams params = cfg.flow;
    params.kind = FlowKind::DeltaKFlow;
    params.big_k = k;
    SweepRow row;
    row.k = k;
    const auto observe = [&](const FieldMap& u) {
      const GradientField grad = gradient(u);
      for (std::size_t c = 0; c < u.grid.cell_count(); ++c) {
        const double d2 = params.target.dist_sq(u.at(c));
        row.sup_k2_dist2 = std::max(row.sup_k2_dist2, k * k * d2);
        double g2 = 0.0;
        const double* gc = grad.at(c);
        for (std::size_t i = 0; i < grad.block(); ++i) g2 += gc[i] * gc[i];
        row.sup_grad = std::max(row.sup_grad, std::sqrt(g2));
      }
    };
    const FieldHistory h = run(initial, params, control, observe);
    if (h.blowup_time) throw BlowupDetected(*h.blowup_time, h.blowup_cell.value_or(0));
    row.sup_k_dist = std::sqrt(row.sup_k2_dist2);
    row.l2_to_delta_flow = l2_distance(h.snapshots.back(), ref.snapshots.back());
    res.rows.push_back(row);
    auto& m = sups.emplace_back();
    for (const RegularityWitness& w : regularity_witnesses(h, res.eps0, scales, window, cfg.gamma)) {
      m[w.z.x] = w.sup_grad;
    }
  }
  for (const auto& [x, first] : sups.front()) {
    double lo = first;
    double hi = first;
    bool everywhere = true;
    for (const auto& m : sups) {
      const auto it = m.find(x);
      if (it == m.end()) {
        everywhere = false;
        break;
      }
      lo = std::min(lo, it->second);
      hi = std::max(hi, it->second);
    }
    if (!everywhere) continue;
    ++res.witness_points;
    res.witness_sup = std::max(res.witness_sup, std::isfinite(hi) ? hi : std::numeric_limits<double>::infinity());
    const double v = lo > 0.0 ? hi / lo - 1.0 : (hi > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    res.witness_variation = std::max(res.witness_variation, v);
  }

  if (with_scheme_error) {
    RunConfig fine = cfg;
    std::vector<int> sizes;
    std::vector<double> lengths;
    for (int a = 0; a < cfg.grid.dim(); ++a) {
      sizes.push_back(2 * cfg.grid.size(a));
      lengths.push_back(cfg.grid.length(a));
    }
    fine.grid = GridSpec::make(cfg.grid.dim(), sizes, lengths);
    StepControl fc = control;
    fc.dt_override = res.common_dt / 4.0;
    const FieldHistory fh = run(make_initial(fine), proj, fc);
    if (fh.blowup_time) throw BlowupDetected(*fh.blowup_time, fh.blowup_cell.value_or(0));
    res.scheme_error = l2_distance(ref.snapshots.back(), fh.snapshots.back());
  }
  return res;
}

void save_history(const FieldHistory& history, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
  nlohmann::json idx;
  idx["snapshot_dt"] = history.snapshot_dt;
  idx["step_dts"] = history.step_dts;
  if (history.blowup_time) idx["blowup_time"] = *history.blowup_time;
  if (history.blowup_cell) idx["blowup_cell"] = *history.blowup_cell;
  nlohmann::json files = nlohmann::json::array();
  for (std::size_t i = 0; i < history.snapshots.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "snap_%06zu.pflw", i);
    save_snapshot(history.snapshots[i], (fs::path(dir) / name).string());
    files.push_back(name);
  }
  idx["files"] = files;
  write_text((fs::path(dir) / "index.json").string(), idx.dump(1));
}

FieldHistory load_history(const std::string& dir, const FlowParams& params) {
  std::ifstream in(fs::path(dir) / "index.json");
  if (!in) throw IoError("cannot open history index in '" + dir + "'");
  nlohmann::json idx;
  try {
    idx = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("history index: ") + e.what());
  }
  FieldHistory h;
  h.params = params;
  h.snapshot_dt = idx.value("snapshot_dt", 0.0);
  h.step_dts = idx.value("step_dts", std::vector<double>{});
  if (idx.contains("blowup_time")) h.blowup_time = idx["blowup_time"].get<double>();
  if (idx.contains("blowup_cell")) h.blowup_cell = idx["blowup_cell"].get<std::size_t>();
  for (const auto& f : idx.at("files")) h.append(load_snapshot((fs::path(dir) / f.get<std::string>()).string()));
  return h;
}

int run_command(const std::string& name, const RunConfig& cfg, const HarnessOptions& options, std::ostream& log) {
  Context ctx{cfg, options, log, fs::path(options.out_dir.empty() ? cfg.output_dir : options.out_dir), {}};
  std::error_code ec;
  fs::create_directories(ctx.out, ec);
  if (ec) throw IoError("cannot create '" + ctx.out.string() + "': " + ec.message());
  if (name == "run") return cmd_run(ctx);
  if (name == "diagnose") return cmd_diagnose(ctx);
  if (name == "phi") return cmd_phi(ctx);
  if (name == "sweep-k") return cmd_sweep(ctx);
  if (name == "detect") return cmd_detect(ctx);
  if (name == "report") return cmd_report(ctx);
  throw DomainError("unknown subcommand '" + name + "'");
}

}  // namespace pflow
