#include "pflow/concentration.hpp"

#include "pflow/diagnostics.hpp"
#include "pflow/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace pflow {

namespace {

std::vector<std::size_t> window_times(const FieldHistory& history, const ScanWindow& window, const char* op) {
  if (history.empty()) throw RangeError(std::string(op) + ": empty history");
  if (window.stride < 1) throw DomainError(std::string(op) + ": stride must be >= 1");
  if (window.t_end < window.t_begin) throw DomainError(std::string(op) + ": empty time window");
  const double tol = 1e-12 * std::max(1.0, std::abs(window.t_end));
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < history.snapshots.size(); ++j) {
    const double t = history.snapshots[j].time;
    if (t >= window.t_begin - tol && t <= window.t_end + tol) out.push_back(j);
  }
  return out;
}

bool on_stride(const GridSpec& g, std::size_t cell, int stride) {
  for (int a = 0; a < g.dim(); ++a) {
    if (g.coord(cell, a) % stride != 0) return false;
  }
  return true;
}

}  // namespace

std::vector<SpacetimePoint> flag_concentration(const FieldHistory& history, double eps0,
                                               const std::vector<double>& scale_set, const ScanWindow& window) {
  const char* op = "flag_concentration";
  if (scale_set.empty()) throw DomainError(std::string(op) + ": empty scale set");
  const auto times = window_times(history, window, op);
  std::vector<SpacetimePoint> out;
  for (std::size_t j : times) {
    const FieldMap& snap = history.snapshots[j];
    const GridSpec& g = snap.grid;
    std::vector<double> min_phi(g.cell_count(), std::numeric_limits<double>::infinity());
    for (double s : scale_set) {
      const ScalarField f = phi_field(history, snap.time, s);
      for (std::size_t c = 0; c < g.cell_count(); ++c) min_phi[c] = std::min(min_phi[c], f.values[c]);
    }
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
      if (!on_stride(g, c, window.stride) || !(min_phi[c] >= eps0)) continue;
      SpacetimePoint z{snap.time, std::vector<double>(static_cast<std::size_t>(g.dim()))};
      for (int a = 0; a < g.dim(); ++a) z.x[static_cast<std::size_t>(a)] = g.position(c, a);
      out.push_back(std::move(z));
    }
  }
  return out;
}

namespace {

std::vector<double> root_density(const FieldMap& u, const FlowParams& params) {
  std::vector<double> v = energy_density(u, params).values;
  for (double& x : v) x = std::sqrt(x);
  return v;
}

// sup of `dens` over the closed periodic ball B_r(x)
double ball_sup(const GridSpec& g, const std::vector<double>& dens, const std::vector<double>& x, double r) {
  double best = 0.0;
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    double d2 = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      const double len = g.length(a);
      double d = std::fmod(std::abs(g.position(c, a) - x[static_cast<std::size_t>(a)]), len);
      d = std::min(d, len - d);
      d2 += d * d;
    }
    if (d2 <= r * r * (1.0 + 1e-12)) best = std::max(best, dens[c]);
  }
  return best;
}

}  // namespace

double cylinder_sup_grad(const FieldHistory& history, const SpacetimePoint& z, double radius) {
  if (!(radius > 0.0)) throw DomainError("cylinder_sup_grad: radius must be positive");
  if (history.empty()) throw RangeError("cylinder_sup_grad: empty history");
  const double tol = 1e-12 * std::max(1.0, std::abs(z.t));
  double best = 0.0;
  bool any = false;
  for (const FieldMap& u : history.snapshots) {
    if (u.time < z.t - radius * radius - tol || u.time > z.t + tol) continue;
    best = std::max(best, ball_sup(u.grid, root_density(u, history.params), z.x, radius));
    any = true;
  }
  if (!any) throw RangeError("cylinder_sup_grad: no stored snapshot inside the cylinder");
  return best;
}

std::vector<RegularityWitness> regularity_witnesses(const FieldHistory& history, double eps0,
                                                    const std::vector<double>& scale_set, const ScanWindow& window,
                                                    double gamma) {
  const char* op = "regularity_witnesses";
  if (scale_set.empty()) throw DomainError(std::string(op) + ": empty scale set");
  if (!(gamma > 0.0)) throw DomainError(std::string(op) + ": gamma must be positive");
  const auto times = window_times(history, window, op);
  std::vector<RegularityWitness> out;
  for (std::size_t j : times) {
    const FieldMap& snap = history.snapshots[j];
    const GridSpec& g = snap.grid;
    std::vector<double> min_phi(g.cell_count(), std::numeric_limits<double>::infinity());
    std::vector<double> arg(g.cell_count(), 0.0);
    for (double s : scale_set) {
      const ScalarField f = phi_field(history, snap.time, s);
      for (std::size_t c = 0; c < g.cell_count(); ++c) {
        if (f.values[c] < min_phi[c]) {
          min_phi[c] = f.values[c];
          arg[c] = s;
        }
      }
    }
    // cylinder sups reuse one density per snapshot
    std::vector<std::pair<const FieldMap*, std::vector<double>>> dens;
    const double rmax = gamma * std::sqrt(*std::max_element(scale_set.begin(), scale_set.end()));
    const double tol = 1e-12 * std::max(1.0, std::abs(snap.time));
    for (const FieldMap& u : history.snapshots) {
      if (u.time >= snap.time - rmax * rmax - tol && u.time <= snap.time + tol) {
        dens.emplace_back(&u, root_density(u, history.params));
      }
    }
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
      if (!on_stride(g, c, window.stride) || !(min_phi[c] < eps0)) continue;
      RegularityWitness w;
      w.z = SpacetimePoint{snap.time, std::vector<double>(static_cast<std::size_t>(g.dim()))};
      for (int a = 0; a < g.dim(); ++a) w.z.x[static_cast<std::size_t>(a)] = g.position(c, a);
      w.s_star = arg[c];
      w.phi_min = min_phi[c];
      const double r = gamma * std::sqrt(w.s_star);
      for (const auto& [u, d] : dens) {
        if (u->time >= snap.time - r * r - tol) w.sup_grad = std::max(w.sup_grad, ball_sup(g, d, w.z.x, r));
      }
      out.push_back(std::move(w));
    }
  }
  return out;
}

double parabolic_distance(const SpacetimePoint& a, const SpacetimePoint& b, const std::vector<double>& lengths) {
  if (a.x.size() != b.x.size()) throw DomainError("parabolic_distance: dimension mismatch");
  double dx2 = 0.0;
  for (std::size_t i = 0; i < a.x.size(); ++i) {
    double d = std::abs(a.x[i] - b.x[i]);
    if (i < lengths.size()) {
      d = std::fmod(d, lengths[i]);
      d = std::min(d, lengths[i] - d);
    }
    dx2 += d * d;
  }
  return std::max(std::sqrt(std::abs(a.t - b.t)), std::sqrt(dx2));
}

PackingResult minkowski_content(const std::vector<SpacetimePoint>& flags, double r, double p, int n,
                                const std::vector<double>& lengths) {
  if (!(r > 0.0)) throw DomainError("minkowski_content: r must be positive");
  std::vector<const SpacetimePoint*> order;
  order.reserve(flags.size());
  for (const auto& z : flags) order.push_back(&z);
  std::stable_sort(order.begin(), order.end(), [](const SpacetimePoint* a, const SpacetimePoint* b) {
    if (a->t != b->t) return a->t < b->t;
    return a->x < b->x;
  });
  PackingResult out;
  out.r = r;
  for (const SpacetimePoint* z : order) {
    bool free = true;
    for (const auto& c : out.centers) {
      if (parabolic_distance(*z, c, lengths) < 2.0 * r) {
        free = false;
        break;
      }
    }
    if (free) out.centers.push_back(*z);
  }
  out.count = out.centers.size();
  out.estimate = static_cast<double>(out.count) * std::pow(r, n + 2.0 - p);
  return out;
}

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms = 0.0;
  double r_squared = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const auto m = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("decay_exponent_fit: degenerate time window");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss += r * r;
  }
  f.rms = std::sqrt(ss / m);
  f.r_squared = syy > 0.0 ? 1.0 - ss / syy : 1.0;
  return f;
}

}  // namespace

DecayFit decay_exponent_fit(const std::vector<double>& times, const std::vector<double>& sups, double max_rms) {
  if (times.size() != sups.size()) throw DomainError("decay_exponent_fit: series lengths differ");
  if (times.size() < 8) throw DomainError("decay_exponent_fit: need at least 8 samples");
  const std::size_t m = times.size();
  std::vector<double> lx(m), ly(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(times[i] > 0.0) || !(sups[i] > 0.0)) throw DomainError("decay_exponent_fit: times and values must be positive");
    lx[i] = std::log(times[i]);
    ly[i] = std::log(sups[i]);
  }
  const LineFit power = fit_line(lx, ly);
  const LineFit expo = fit_line(times, ly);
  DecayFit fit;
  fit.samples = m;
  fit.beta = power.slope;
  fit.log_c = power.intercept;
  fit.rms_residual = power.rms;
  fit.exp_rms_residual = expo.rms;
  fit.r_squared = power.r_squared;
  fit.gate_passed = fit.rms_residual <= max_rms && fit.rms_residual <= 0.5 * fit.exp_rms_residual;
  return fit;
}

DecayFit decay_exponent_fit(const FieldHistory& history, double t_begin, double t_end, double max_rms) {
  const auto idx = window_times(history, ScanWindow{t_begin, t_end, 1}, "decay_exponent_fit");
  std::vector<double> times, sups;
  for (std::size_t j : idx) {
    const FieldMap& u = history.snapshots[j];
    const GradientField g = gradient(u);
    double best = 0.0;
    for (std::size_t c = 0; c < u.grid.cell_count(); ++c) {
      double s = 0.0;
      const double* gc = g.at(c);
      for (std::size_t i = 0; i < g.block(); ++i) s += gc[i] * gc[i];
      best = std::max(best, s);
    }
    times.push_back(u.time);
    sups.push_back(std::sqrt(best));
  }
  return decay_exponent_fit(times, sups, max_rms);
}

std::string ConcentrationReport::to_json() const {
  nlohmann::json j;
  j["eps0"] = eps0;
  nlohmann::json fl = nlohmann::json::array();
  for (const auto& z : flags) {
    nlohmann::json row = nlohmann::json::array();
    row.push_back(z.t);
    for (double x : z.x) row.push_back(x);
    fl.push_back(row);
  }
  j["flags"] = fl;
  nlohmann::json pk = nlohmann::json::array();
  for (const auto& p : packings) pk.push_back({{"r", p.r}, {"count", p.count}, {"estimate", p.estimate}});
  j["packings"] = pk;
  if (blowup_time) j["blowup_time"] = *blowup_time;
  return j.dump(2);
}

double calibrate_eps0(const FieldHistory& reference, const std::vector<double>& scale_set, const ScanWindow& window) {
  const auto times = window_times(reference, window, "calibrate_eps0");
  double best = 0.0;
  for (std::size_t j : times) {
    for (double s : scale_set) {
      const ScalarField f = phi_field(reference, reference.snapshots[j].time, s);
      for (double v : f.values) best = std::max(best, v);
    }
  }
  return 4.0 * best;
}

}  // namespace pflow
