#include "pflow/diagnostics.hpp"

#include "pflow/errors.hpp"
#include "pflow/flow.hpp"
#include "pflow/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace pflow {

namespace {

std::size_t snapshot_index(const FieldHistory& history, double t, const char* op) {
  if (history.empty()) throw RangeError(std::string(op) + ": empty history");
  const auto idx = history.find(t, 1e-10 * std::max(1.0, std::abs(t)));
  if (!idx) throw RangeError(std::string(op) + ": no snapshot at t = " + std::to_string(t));
  return *idx;
}

std::size_t interior_index(const FieldHistory& history, double t, const char* op) {
  const std::size_t i = snapshot_index(history, t, op);
  if (i == 0 || i + 1 >= history.snapshots.size()) {
    throw RangeError(std::string(op) + ": t = " + std::to_string(t) + " is at the history boundary");
  }
  return i;
}

std::vector<double> powers(const EnergyDensityField& e, double q) {
  std::vector<double> out(e.values.size());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = std::pow(e.values[c], q);
  return out;
}

double periodic_dist_sq(const GridSpec& g, std::size_t cell, std::span<const double> x) {
  double s = 0.0;
  for (int a = 0; a < g.dim(); ++a) {
    const double len = g.length(a);
    double d = std::fmod(std::abs(g.position(cell, a) - x[static_cast<std::size_t>(a)]), len);
    d = std::min(d, len - d);
    s += d * d;
  }
  return s;
}

// Snapshot indices inside (t - r^2, t] with trapezoid weights; the lower end is clipped to the history.
std::vector<std::pair<std::size_t, double>> time_weights(const FieldHistory& history, double t, double r,
                                                         const char* op) {
  const double tol = 1e-10 * std::max(1.0, std::abs(t));
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < history.snapshots.size(); ++j) {
    const double tj = history.snapshots[j].time;
    if (tj >= t - r * r - tol && tj <= t + tol) idx.push_back(j);
  }
  if (idx.size() < 2) throw DomainError(std::string(op) + ": window holds fewer than two snapshots");
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t m = 0; m < idx.size(); ++m) {
    double w = 0.0;
    if (m > 0) w += 0.5 * (history.snapshots[idx[m]].time - history.snapshots[idx[m - 1]].time);
    if (m + 1 < idx.size()) w += 0.5 * (history.snapshots[idx[m + 1]].time - history.snapshots[idx[m]].time);
    out.emplace_back(idx[m], w);
  }
  return out;
}

std::vector<std::size_t> ball_cells(const GridSpec& g, std::span<const double> x, double r, const char* op) {
  if (x.size() != static_cast<std::size_t>(g.dim())) {
    throw DomainError(std::string(op) + ": window centre has the wrong dimension");
  }
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    if (periodic_dist_sq(g, c, x) < r * r) out.push_back(c);
  }
  if (out.empty()) throw DomainError(std::string(op) + ": window contains no cells");
  return out;
}

// Per-cell (|grad F_K|^2 + |hess u|^2) e^{(p-2)/2}.
std::vector<double> w22_density(const FieldMap& u, const FlowParams& params) {
  const GradientField grad = gradient(u);
  const HessianField hess = hessian(grad);
  const EnergyDensityField e = energy_density(u, grad, params);
  const double k = params.effective_k();
  std::vector<double> out(u.grid.cell_count());
  std::vector<double> gf(static_cast<std::size_t>(u.d));
  for (std::size_t c = 0; c < out.size(); ++c) {
    double s = 0.0;
    const double* h = hess.at(c);
    for (std::size_t i = 0; i < hess.block(); ++i) s += h[i] * h[i];
    if (k != 0.0) {
      params.target.penalty_and_grad_into(params.chi, u.at(c), k, gf);
      for (double v : gf) s += v * v;
    }
    out[c] = s * std::pow(e.values[c], 0.5 * (params.p - 2.0));
  }
  return out;
}

}  // namespace

double total_energy(const FieldMap& field, const FlowParams& params) {
  const EnergyDensityField e = energy_density(field, params);
  double s = 0.0;
  for (double v : e.values) s += std::pow(v, 0.5 * params.p);
  return s * field.grid.cell_volume() / params.p;
}

double dissipation_integral(const FieldMap& field, const FlowParams& params) {
  const EnergyDensityField e = energy_density(field, params);
  const FieldMap f = rhs(field, params);
  double s = 0.0;
  for (std::size_t c = 0; c < e.values.size(); ++c) {
    double v2 = 0.0;
    for (double v : f.at(c)) v2 += v * v;
    s += std::pow(e.values[c], 0.5 * (params.p - 2.0)) * v2;
  }
  return s * field.grid.cell_volume();
}

double dissipation_residual(const FieldHistory& history, double t) {
  const std::size_t i = interior_index(history, t, "dissipation_residual");
  const FieldMap& prev = history.snapshots[i - 1];
  const FieldMap& next = history.snapshots[i + 1];
  const double de = (total_energy(next, history.params) - total_energy(prev, history.params)) / (next.time - prev.time);
  const double diss = dissipation_integral(history.snapshots[i], history.params);
  return std::abs(de + diss) / (std::abs(de) + 1.0);
}

ScalarField apply_A(const ScalarField& psi, const GradientField& grad_u, const EnergyDensityField& e,
                    const FlowParams& params) {
  const GridSpec& g = psi.grid;
  if (!(grad_u.grid == g) || !(e.grid == g)) throw DomainError("apply_A: grids differ");
  const int n = g.dim();
  const int d = grad_u.d;
  const std::vector<double> hpsi = scalar_hessian(psi);
  const double pm2 = params.p - 2.0;
  ScalarField out{g, std::vector<double>(g.cell_count())};
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const double* h = hpsi.data() + c * static_cast<std::size_t>(n * n);
    double lap = 0.0;
    for (int a = 0; a < n; ++a) lap += h[a * n + a];
    double corr = 0.0;
    if (pm2 != 0.0) {
      const double* gu = grad_u.at(c);
      for (int k = 0; k < d; ++k)
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) corr += h[a * n + b] * gu[k * n + a] * gu[k * n + b];
      corr *= pm2 / e.values[c];
    }
    out.values[c] = lap + corr;
  }
  return out;
}

namespace {

// (d_t - A) e^{p/2} at interior snapshot i, and optionally the explicit right-hand side.
void bochner_sides(const FieldHistory& history, std::size_t i, std::vector<double>& lhs, std::vector<double>* rhs_out,
                   std::vector<double>* e_out) {
  const FlowParams& params = history.params;
  const double p = params.p;
  const FieldMap& u = history.snapshots[i];
  const FieldMap& prev = history.snapshots[i - 1];
  const FieldMap& next = history.snapshots[i + 1];
  const GridSpec& g = u.grid;
  const int n = g.dim();
  const int d = u.d;

  const GradientField grad = gradient(u);
  const EnergyDensityField e = energy_density(u, grad, params);
  const std::vector<double> ep_prev = powers(energy_density(prev, params), 0.5 * p);
  const std::vector<double> ep_next = powers(energy_density(next, params), 0.5 * p);
  const ScalarField ep{g, powers(e, 0.5 * p)};
  const ScalarField a_ep = apply_A(ep, grad, e, params);
  const double span = next.time - prev.time;

  lhs.assign(g.cell_count(), 0.0);
  for (std::size_t c = 0; c < g.cell_count(); ++c) lhs[c] = (ep_next[c] - ep_prev[c]) / span - a_ep.values[c];
  if (e_out) *e_out = e.values;
  if (!rhs_out) return;

  const HessianField hess = hessian(grad);
  const ScalarField e_scalar{g, e.values};
  const std::vector<double> grad_e = scalar_gradient(e_scalar);
  const double k = params.effective_k();
  const double k2 = k * k;
  std::vector<double>& r = *rhs_out;
  r.assign(g.cell_count(), 0.0);
  std::vector<double> gf(static_cast<std::size_t>(d));
  std::vector<double> hf(static_cast<std::size_t>(d * d));
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const double* gu = grad.at(c);
    const double ec = e.values[c];
    const double w = std::pow(ec, 0.5 * (p - 2.0));
    double hess_sq = 0.0;
    const double* h = hess.at(c);
    for (std::size_t m = 0; m < hess.block(); ++m) hess_sq += h[m] * h[m];
    double hf_term = 0.0;
    double gf_sq = 0.0;
    if (k != 0.0 && !params.target.is_flat()) {
      params.target.penalty_and_grad_into(params.chi, u.at(c), k, gf);
      for (double v : gf) gf_sq += v * v;
      params.target.hess_f_into(params.chi, u.at(c), hf);
      for (int a = 0; a < n; ++a)
        for (int ki = 0; ki < d; ++ki)
          for (int ii = 0; ii < d; ++ii) hf_term += hf[static_cast<std::size_t>(ki * d + ii)] * gu[ki * n + a] * gu[ii * n + a];
      hf_term *= k2;
    }
    double mix = 0.0;
    const double* ge = grad_e.data() + c * static_cast<std::size_t>(n);
    for (int ki = 0; ki < d; ++ki) {
      double s = 0.0;
      for (int a = 0; a < n; ++a) s += gu[ki * n + a] * ge[a];
      mix += s * s;
    }
    r[c] = -p * w * hf_term - 0.25 * p * w * gf_sq - p * w * hess_sq -
           0.25 * p * p * (p - 2.0) * std::pow(ec, 0.5 * p - 3.0) * mix;
  }
}

void check_bochner_kind(const FieldHistory& history, const char* op) {
  if (history.params.kind == FlowKind::DeltaFlowProjected && !history.params.target.is_flat()) {
    throw DomainError(std::string(op) + ": defined for (delta,K)-flow histories only");
  }
}

}  // namespace

BochnerResidual bochner_residual(const FieldHistory& history, double t) {
  check_bochner_kind(history, "bochner_residual");
  const std::size_t i = interior_index(history, t, "bochner_residual");
  std::vector<double> lhs;
  std::vector<double> rhs_v;
  bochner_sides(history, i, lhs, &rhs_v, nullptr);
  const GridSpec& g = history.snapshots[i].grid;
  BochnerResidual out;
  out.field = ScalarField{g, std::vector<double>(g.cell_count())};
  double sq = 0.0;
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const double r = lhs[c] - rhs_v[c];
    out.field.values[c] = r;
    out.linf = std::max(out.linf, std::abs(r));
    sq += r * r;
  }
  out.l2 = std::sqrt(sq * g.cell_volume());
  return out;
}

BochnerMargin bochner_inequality_check(const FieldHistory& history, double t, double c) {
  check_bochner_kind(history, "bochner_inequality_check");
  const std::size_t i = interior_index(history, t, "bochner_inequality_check");
  std::vector<double> lhs;
  std::vector<double> e;
  bochner_sides(history, i, lhs, nullptr, &e);
  const double p = history.params.p;
  BochnerMargin out{std::numeric_limits<double>::infinity(), 0.0};
  for (std::size_t m = 0; m < lhs.size(); ++m) {
    const double scale = std::pow(e[m], 0.5 * (p + 2.0));
    out.min_margin = std::min(out.min_margin, c * scale - lhs[m]);
    out.empirical_c = std::max(out.empirical_c, lhs[m] / scale);
  }
  return out;
}

double max_principle_check(const FieldHistory& history) {
  if (!history.params.target.is_flat()) throw DomainError("max_principle_check: target must be flat");
  if (history.empty()) throw RangeError("max_principle_check: empty history");
  const double d2 = history.params.delta * history.params.delta;
  auto sup_grad = [&](const FieldMap& u) {
    const GradientField grad = gradient(u);
    double best = 0.0;
    for (std::size_t c = 0; c < u.grid.cell_count(); ++c) {
      double s = 0.0;
      const double* gu = grad.at(c);
      for (std::size_t m = 0; m < grad.block(); ++m) s += gu[m] * gu[m];
      best = std::max(best, s);
    }
    return std::sqrt(d2 + best);
  };
  const double initial = sup_grad(history.snapshots.front());
  double best = initial;
  for (std::size_t j = 1; j < history.snapshots.size(); ++j) best = std::max(best, sup_grad(history.snapshots[j]));
  return best - initial;
}

WeightedHessianResult weighted_hessian_integral(const FieldHistory& history, const ParabolicWindow& window) {
  const char* op = "weighted_hessian_integral";
  if (!(window.radius > 0.0)) throw DomainError(std::string(op) + ": window radius must be positive");
  if (history.empty()) throw DomainError(std::string(op) + ": empty history");
  const GridSpec& g = history.snapshots.front().grid;
  const FlowParams& params = history.params;
  const auto inner_t = time_weights(history, window.t, window.radius, op);
  const auto inner_x = ball_cells(g, window.center, window.radius, op);
  const auto outer_t = time_weights(history, window.t, 4.0 * window.radius, op);
  const auto outer_x = ball_cells(g, window.center, 4.0 * window.radius, op);
  const double dv = g.cell_volume();
  WeightedHessianResult out;
  for (const auto& [j, w] : inner_t) {
    const std::vector<double> dens = w22_density(history.snapshots[j], params);
    double s = 0.0;
    for (std::size_t c : inner_x) s += dens[c];
    out.integral += w * s * dv;
  }
  for (const auto& [j, w] : outer_t) {
    const EnergyDensityField e = energy_density(history.snapshots[j], params);
    double s = 0.0;
    for (std::size_t c : outer_x) s += std::pow(e.values[c], 0.5 * params.p) + std::pow(e.values[c], 0.5 * params.p + 1.0);
    out.reference += w * s * dv;
  }
  out.ratio = out.reference > 0.0 ? out.integral / out.reference : 0.0;
  return out;
}

LocalEnergyResult local_energy_ratio(const FieldHistory& history, const ParabolicWindow& window) {
  const char* op = "local_energy_ratio";
  if (!(window.radius > 0.0)) throw DomainError(std::string(op) + ": window radius must be positive");
  if (history.empty()) throw DomainError(std::string(op) + ": empty history");
  const GridSpec& g = history.snapshots.front().grid;
  const FlowParams& params = history.params;
  const auto inner_t = time_weights(history, window.t, window.radius, op);
  const auto inner_x = ball_cells(g, window.center, window.radius, op);
  const auto outer_t = time_weights(history, window.t, 2.0 * window.radius, op);
  const auto outer_x = ball_cells(g, window.center, 2.0 * window.radius, op);
  const double dv = g.cell_volume();
  LocalEnergyResult out;
  for (const auto& [j, w] : inner_t) {
    const FieldMap& u = history.snapshots[j];
    const EnergyDensityField e = energy_density(u, params);
    const FieldMap f = rhs(u, params);
    double s = 0.0;
    for (std::size_t c : inner_x) {
      double v2 = 0.0;
      for (double v : f.at(c)) v2 += v * v;
      s += std::pow(e.values[c], 0.5 * (params.p - 2.0)) * v2;
    }
    out.inner += w * s * dv;
  }
  for (const auto& [j, w] : outer_t) {
    const EnergyDensityField e = energy_density(history.snapshots[j], params);
    double s = 0.0;
    for (std::size_t c : outer_x) s += std::pow(e.values[c], 0.5 * params.p);
    out.outer += w * s * dv;
  }
  out.ratio = out.outer > 0.0 ? out.inner / out.outer : 0.0;
  return out;
}

std::vector<DiagnosticsRecord> diagnostics_series(const FieldHistory& history, bool with_bochner, bool with_w22) {
  const FlowParams& params = history.params;
  const bool bochner_ok = with_bochner && !(params.kind == FlowKind::DeltaFlowProjected && !params.target.is_flat());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<DiagnosticsRecord> out;
  out.reserve(history.snapshots.size());
  for (std::size_t j = 0; j < history.snapshots.size(); ++j) {
    const FieldMap& u = history.snapshots[j];
    DiagnosticsRecord r;
    r.time = u.time;
    r.total_energy = total_energy(u, params);
    r.dissipation = dissipation_integral(u, params);
    const EnergyDensityField e = energy_density(u, params);
    r.sup_grad = std::sqrt(*std::max_element(e.values.begin(), e.values.end()));
    if (bochner_ok && j > 0 && j + 1 < history.snapshots.size()) {
      const BochnerResidual b = bochner_residual(history, u.time);
      r.bochner_linf = b.linf;
      r.bochner_l2 = b.l2;
    } else {
      r.bochner_linf = nan;
      r.bochner_l2 = nan;
    }
    if (with_w22) {
      const std::vector<double> dens = w22_density(u, params);
      double s = 0.0;
      for (double v : dens) s += v;
      r.w22_integral = s * u.grid.cell_volume();
    } else {
      r.w22_integral = nan;
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace pflow
