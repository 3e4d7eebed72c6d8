#include "pflow/flow.hpp"

#include "pflow/errors.hpp"
#include "pflow/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace pflow {

namespace {

constexpr double kProjectedDriftTol = 1e-6;

// Per-cell right-hand side. g: d x n Jacobian [k][alpha], hess: [k][alpha][beta].
void rhs_cell(const FlowParams& params, std::span<const double> u, const double* g, const double* hess, int n,
              int d, double* out, double* scratch) {
  const double pm2 = params.p - 2.0;
  const bool projected = params.kind == FlowKind::DeltaFlowProjected;
  double hs = 0.0;
  for (int i = 0; i < d * n; ++i) hs += g[i] * g[i];
  double* grad_f = scratch;
  double e = params.delta * params.delta + hs;
  if (!projected) {
    e += params.target.penalty_and_grad_into(params.chi, u, params.big_k,
                                             {grad_f, static_cast<std::size_t>(d)});
  }
  const double inv_e = 1.0 / e;
  // w_alpha = sum_{beta,i} g^i_beta H^i_{alpha beta}
  double w[kMaxDim] = {0.0, 0.0, 0.0};
  if (pm2 != 0.0) {
    for (int a = 0; a < n; ++a) {
      double s = 0.0;
      for (int i = 0; i < d; ++i) {
        for (int b = 0; b < n; ++b) s += g[i * n + b] * hess[(i * n + a) * n + b];
      }
      w[a] = s;
    }
  }
  // q_alpha = sum_i dF_K^i g^i_alpha
  double q[kMaxDim] = {0.0, 0.0, 0.0};
  if (!projected && pm2 != 0.0) {
    for (int a = 0; a < n; ++a) {
      double s = 0.0;
      for (int i = 0; i < d; ++i) s += grad_f[i] * g[i * n + a];
      q[a] = s;
    }
  }
  for (int k = 0; k < d; ++k) {
    double lap = 0.0;
    for (int a = 0; a < n; ++a) lap += hess[(k * n + a) * n + a];
    double aniso = 0.0;
    for (int a = 0; a < n; ++a) aniso += g[k * n + a] * (w[a] + 0.5 * q[a]);
    double v = lap + pm2 * inv_e * aniso;
    if (!projected) v -= 0.5 * grad_f[k];
    out[k] = v;
  }
  if (projected && !params.target.is_flat()) {
    // u_t = L u - A_u(grad u, grad u) with A_u = -|grad u|^2 u on the unit sphere, evaluated at pi(u).
    double r = 0.0;
    for (int k = 0; k < d; ++k) r += u[k] * u[k];
    r = std::sqrt(r);
    for (int k = 0; k < d; ++k) out[k] += hs * u[k] / r;
  }
}

}  // namespace

double CoefficientTensor::quadratic_form(const Eigen::MatrixXd& h) const {
  double s = 0.0;
  for (int al = 0; al < n; ++al)
    for (int be = 0; be < n; ++be)
      for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i) s += (*this)(al, be, k, i) * h(k, al) * h(i, be);
  return s;
}

CoefficientTensor coefficients(const Eigen::MatrixXd& grad_u, const Eigen::VectorXd& u, const FlowParams& params) {
  const int d = static_cast<int>(grad_u.rows());
  const int n = static_cast<int>(grad_u.cols());
  const double k = params.effective_k();
  Eigen::VectorXd grad_f = Eigen::VectorXd::Zero(d);
  const double fk = params.target.penalty_and_grad_into(params.chi, {u.data(), static_cast<std::size_t>(d)}, k,
                                                        {grad_f.data(), static_cast<std::size_t>(d)});
  const double e = params.delta * params.delta + fk + grad_u.squaredNorm();
  const double pm2 = params.p - 2.0;
  CoefficientTensor out;
  out.n = n;
  out.d = d;
  out.a.assign(static_cast<std::size_t>(n * n * d * d), 0.0);
  for (int al = 0; al < n; ++al)
    for (int be = 0; be < n; ++be)
      for (int kk = 0; kk < d; ++kk)
        for (int i = 0; i < d; ++i) {
          const double id = (al == be && kk == i) ? 1.0 : 0.0;
          out.a[static_cast<std::size_t>(((al * n + be) * d + kk) * d + i)] =
              id + pm2 * grad_u(kk, al) * grad_u(i, be) / e;
        }
  // b = -1/2 grad F_K + (p-2)/2 sum_{alpha,i} dF_K^i g^i_alpha g^k_alpha / e
  const Eigen::VectorXd proj = grad_u.transpose() * grad_f;  // length n
  out.b = -0.5 * grad_f + 0.5 * pm2 * (grad_u * proj) / e;
  return out;
}

EllipticityBounds ellipticity_bounds(const CoefficientTensor& a, int trials, std::uint64_t seed) {
  if (trials < 1) throw DomainError("ellipticity_bounds: trials must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  EllipticityBounds out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  Eigen::MatrixXd h(a.d, a.n);
  for (int t = 0; t < trials; ++t) {
    for (int k = 0; k < a.d; ++k)
      for (int al = 0; al < a.n; ++al) h(k, al) = normal(rng);
    h /= h.norm();
    const double q = a.quadratic_form(h);
    out.min = std::min(out.min, q);
    out.max = std::max(out.max, q);
  }
  return out;
}

void StepControl::validate() const {
  if (!(cfl_sigma > 0.0 && cfl_sigma <= 0.9)) {
    throw ValidationError("control.cfl_sigma", "must lie in (0, 0.9], got " + std::to_string(cfl_sigma));
  }
  if (!(penalty_sigma > 0.0)) throw ValidationError("control.penalty_sigma", "must be > 0");
  if (!(t_end >= 0.0)) throw ValidationError("control.t_end", "must be >= 0");
  if (!(snapshot_dt >= 0.0)) throw ValidationError("control.snapshot_dt", "must be >= 0");
  if (dt_override && !(*dt_override > 0.0)) throw ValidationError("control.dt", "must be > 0");
}

FieldMap rhs(const FieldMap& field, const FlowParams& params) {
  const GridSpec& g = field.grid;
  const int n = g.dim();
  const int d = field.d;
  if (d != params.target.ambient_dim()) throw DomainError("rhs: field dimension does not match target");
  if (params.kind == FlowKind::DeltaFlowProjected && !params.target.is_flat()) {
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
      const double drift = std::abs(std::sqrt(params.target.dist_sq(field.at(c))));
      if (drift > kProjectedDriftTol) {
        throw OffManifoldError("rhs: projected flow off the target by " + std::to_string(drift) + " at cell " +
                               std::to_string(c));
      }
    }
  }
  const GradientField grad = gradient(field);
  const HessianField hess = hessian(grad);
  FieldMap out(g, d, field.time);
  parallel_for(g.cell_count(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> scratch(static_cast<std::size_t>(d));
    for (std::size_t c = begin; c < end; ++c) {
      rhs_cell(params, field.at(c), grad.at(c), hess.at(c), n, d, out.at(c).data(), scratch.data());
    }
  });
  return out;
}

FieldMap rhs_divergence_form(const FieldMap& field, const FlowParams& params) {
  if (!params.target.is_flat() || params.effective_k() != 0.0) {
    throw DomainError("rhs_divergence_form: only defined for flat targets with K = 0");
  }
  const GridSpec& g = field.grid;
  const int n = g.dim();
  const int d = field.d;
  const GradientField grad = gradient(field);
  // flux^k_alpha = w * d_alpha u^k with w = e^{(p-2)/2}
  std::vector<double> weight(g.cell_count());
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const double* gc = grad.at(c);
    double hs = 0.0;
    for (std::size_t i = 0; i < grad.block(); ++i) hs += gc[i] * gc[i];
    weight[c] = std::pow(params.delta * params.delta + hs, 0.5 * (params.p - 2.0));
  }
  FieldMap out(g, d, field.time);
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    for (int k = 0; k < d; ++k) {
      double div = 0.0;
      for (int a = 0; a < n; ++a) {
        const std::size_t up = g.neighbor_plus(c, a);
        const std::size_t dn = g.neighbor_minus(c, a);
        div += (weight[up] * grad(up, k, a) - weight[dn] * grad(dn, k, a)) / (2.0 * g.spacing(a));
      }
      out.at(c)[k] = div / weight[c];
    }
  }
  return out;
}

double stable_dt(const FlowParams& params, const GridSpec& grid, const StepControl& control) {
  const double h = grid.min_spacing();
  const double diffusion = control.cfl_sigma * h * h / (2.0 * grid.dim() * (params.p - 1.0));
  const double k2 = params.effective_k() * params.effective_k();
  const double penalty = control.penalty_sigma / std::max(k2, 1.0);
  return std::min(diffusion, penalty);
}

FieldMap step(const FieldMap& field, double dt, const FlowParams& params) {
  const FieldMap f = rhs(field, params);
  FieldMap out(field.grid, field.d, field.time + dt);
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = field.values[i] + dt * f.values[i];
  const bool project = params.kind == FlowKind::DeltaFlowProjected && !params.target.is_flat();
  for (std::size_t c = 0; c < out.grid.cell_count(); ++c) {
    auto v = out.at(c);
    for (double x : v) {
      if (!std::isfinite(x)) throw BlowupDetected(out.time, c);
    }
    if (project) {
      try {
        params.target.project_into(v, v);
      } catch (const CutLocusError&) {
        throw BlowupDetected(out.time, c);
      }
    }
  }
  return out;
}

FieldHistory run(const FieldMap& initial, const FlowParams& params, const StepControl& control,
                 const StepObserver& observer) {
  params.validate();
  control.validate();
  if (!initial.all_finite()) throw DomainError("run: initial data contains non-finite values");
  FieldHistory history;
  history.params = params;
  history.snapshot_dt = control.snapshot_dt;
  history.append(initial);
  if (observer) observer(initial);
  const double dt_max = control.dt_override.value_or(stable_dt(params, initial.grid, control));
  FieldMap current = initial;
  const double t0 = initial.time;
  const double t_end = t0 + control.t_end;
  const double eps = 1e-9 * dt_max;
  long next_snap = 1;
  while (current.time < t_end - eps) {
    double dt = std::min(dt_max, t_end - current.time);
    double snap_time = t_end;
    if (control.snapshot_dt > 0.0) {
      snap_time = t0 + static_cast<double>(next_snap) * control.snapshot_dt;
      while (snap_time <= current.time + eps) snap_time = t0 + static_cast<double>(++next_snap) * control.snapshot_dt;
      dt = std::min(dt, snap_time - current.time);
    }
    try {
      current = step(current, dt, params);
    } catch (const BlowupDetected& b) {
      history.blowup_time = b.time();
      history.blowup_cell = b.cell();
      return history;
    }
    history.step_dts.push_back(dt);
    if (observer) observer(current);
    const bool at_end = current.time >= t_end - eps;
    const bool at_snap = control.snapshot_dt <= 0.0 || std::abs(current.time - snap_time) <= eps;
    if (at_end) current.time = t_end;
    if (at_snap && !at_end && control.snapshot_dt > 0.0) {
      current.time = snap_time;
      ++next_snap;
    }
    if (at_snap || at_end) history.append(current);
  }
  return history;
}

void advance(FieldHistory& history, int steps, double dt) {
  if (history.empty()) throw RangeError("advance: empty history");
  FieldMap current = history.snapshots.back();
  for (int s = 0; s < steps; ++s) {
    try {
      current = step(current, dt, history.params);
    } catch (const BlowupDetected& b) {
      history.blowup_time = b.time();
      history.blowup_cell = b.cell();
      return;
    }
    history.step_dts.push_back(dt);
    history.append(current);
  }
}

}  // namespace pflow
