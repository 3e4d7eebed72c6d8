#include "pflow/field.hpp"

#include "pflow/errors.hpp"
#include "pflow/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pflow {

void FlowParams::validate() const {
  if (!(p >= 2.0)) throw ValidationError("flow.p", "must be >= 2, got " + std::to_string(p));
  if (!(delta > 0.0)) throw ValidationError("flow.delta", "must be > 0, got " + std::to_string(delta));
  if (!(big_k >= 0.0)) throw ValidationError("flow.bigK", "must be >= 0, got " + std::to_string(big_k));
}

FlowParams make_params(double p, double delta, double big_k, FlowKind kind, const TargetSpec& target) {
  FlowParams fp;
  fp.p = p;
  fp.delta = delta;
  fp.big_k = big_k;
  fp.kind = kind;
  fp.target = target;
  fp.chi = ChiProfile(target.is_flat() ? 0.5 : target.r0());
  fp.validate();
  return fp;
}

bool FieldMap::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

GradientField gradient(const FieldMap& field) {
  const GridSpec& g = field.grid;
  const int n = g.dim();
  const int d = field.d;
  GradientField out{g, d, std::vector<double>(g.cell_count() * static_cast<std::size_t>(d * n))};
  std::array<double, kMaxDim> inv2h{};
  for (int a = 0; a < n; ++a) inv2h[a] = 0.5 / g.spacing(a);
  parallel_for(g.cell_count(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      double* dst = out.data.data() + c * out.block();
      for (int a = 0; a < n; ++a) {
        const auto up = field.at(g.neighbor_plus(c, a));
        const auto dn = field.at(g.neighbor_minus(c, a));
        for (int k = 0; k < d; ++k) dst[k * n + a] = (up[k] - dn[k]) * inv2h[a];
      }
    }
  });
  return out;
}

HessianField hessian(const GradientField& grad) {
  const GridSpec& g = grad.grid;
  const int n = g.dim();
  const int d = grad.d;
  HessianField out{g, d, std::vector<double>(g.cell_count() * static_cast<std::size_t>(d * n * n))};
  std::array<double, kMaxDim> inv2h{};
  for (int a = 0; a < n; ++a) inv2h[a] = 0.5 / g.spacing(a);
  parallel_for(g.cell_count(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      double* dst = out.data.data() + c * out.block();
      for (int b = 0; b < n; ++b) {
        const double* up = grad.at(g.neighbor_plus(c, b));
        const double* dn = grad.at(g.neighbor_minus(c, b));
        for (int k = 0; k < d; ++k) {
          for (int a = 0; a < n; ++a) dst[(k * n + a) * n + b] = (up[k * n + a] - dn[k * n + a]) * inv2h[b];
        }
      }
      for (int k = 0; k < d; ++k) {
        for (int a = 0; a < n; ++a) {
          for (int b = a + 1; b < n; ++b) {
            const double sym = 0.5 * (dst[(k * n + a) * n + b] + dst[(k * n + b) * n + a]);
            dst[(k * n + a) * n + b] = sym;
            dst[(k * n + b) * n + a] = sym;
          }
        }
      }
    }
  });
  return out;
}

HessianField hessian(const FieldMap& field) { return hessian(gradient(field)); }

std::vector<double> scalar_gradient(const ScalarField& f) {
  FieldMap tmp(f.grid, 1);
  tmp.values = f.values;
  return gradient(tmp).data;
}

std::vector<double> scalar_hessian(const ScalarField& f) {
  FieldMap tmp(f.grid, 1);
  tmp.values = f.values;
  return hessian(tmp).data;
}

EnergyDensityField energy_density(const FieldMap& field, const GradientField& grad, const FlowParams& params) {
  if (field.d != params.target.ambient_dim()) {
    throw DomainError("energy_density: field dimension " + std::to_string(field.d) +
                      " does not match target ambient dimension " + std::to_string(params.target.ambient_dim()));
  }
  const GridSpec& g = field.grid;
  EnergyDensityField out{g, std::vector<double>(g.cell_count())};
  const double k = params.effective_k();
  const double delta2 = params.delta * params.delta;
  const std::size_t block = grad.block();
  parallel_for(g.cell_count(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> scratch(static_cast<std::size_t>(field.d));
    for (std::size_t c = begin; c < end; ++c) {
      const double* gc = grad.at(c);
      double hs = 0.0;
      for (std::size_t i = 0; i < block; ++i) hs += gc[i] * gc[i];
      const double fk = params.target.penalty_and_grad_into(params.chi, field.at(c), k, scratch);
      out.values[c] = delta2 + fk + hs;
    }
  });
  return out;
}

EnergyDensityField energy_density(const FieldMap& field, const FlowParams& params) {
  return energy_density(field, gradient(field), params);
}

void FieldHistory::append(FieldMap snapshot) {
  if (!snapshots.empty() && !(snapshot.time > snapshots.back().time)) {
    throw RangeError("FieldHistory::append: time " + std::to_string(snapshot.time) +
                     " does not exceed last stored time " + std::to_string(snapshots.back().time));
  }
  snapshots.push_back(std::move(snapshot));
}

std::optional<std::size_t> FieldHistory::find(double t, double tol) const {
  auto it = std::lower_bound(snapshots.begin(), snapshots.end(), t - tol,
                             [](const FieldMap& f, double v) { return f.time < v; });
  if (it != snapshots.end() && std::abs(it->time - t) <= tol) {
    return static_cast<std::size_t>(it - snapshots.begin());
  }
  return std::nullopt;
}

FieldMap FieldHistory::at_time(double t) const {
  if (snapshots.empty()) throw RangeError("FieldHistory::at_time: empty history");
  const double slack = 1e-12 * std::max(1.0, std::abs(t_end()));
  if (t < t_begin() - slack || t > t_end() + slack) {
    throw RangeError("FieldHistory::at_time: t=" + std::to_string(t) + " outside [" + std::to_string(t_begin()) +
                     ", " + std::to_string(t_end()) + "]");
  }
  if (auto idx = find(t, slack)) return snapshots[*idx];
  auto hi = std::upper_bound(snapshots.begin(), snapshots.end(), t,
                             [](double v, const FieldMap& f) { return v < f.time; });
  const FieldMap& b = *hi;
  const FieldMap& a = *(hi - 1);
  const double w = (t - a.time) / (b.time - a.time);
  FieldMap out(a.grid, a.d, t);
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = (1.0 - w) * a.values[i] + w * b.values[i];
  return out;
}

void interpolate_at(const FieldMap& field, std::span<const double> x, std::span<double> out) {
  const GridSpec& g = field.grid;
  const int n = g.dim();
  std::array<int, kMaxDim> base{};
  std::array<double, kMaxDim> frac{};
  for (int a = 0; a < n; ++a) {
    const double s = x[a] / g.spacing(a);
    const double fl = std::floor(s);
    base[a] = static_cast<int>(fl);
    frac[a] = s - fl;
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (int corner = 0; corner < (1 << n); ++corner) {
    double w = 1.0;
    std::array<int, kMaxDim> idx{};
    for (int a = 0; a < n; ++a) {
      const bool upper = (corner >> a) & 1;
      idx[a] = base[a] + (upper ? 1 : 0);
      w *= upper ? frac[a] : 1.0 - frac[a];
    }
    if (w == 0.0) continue;
    const auto v = field.at(g.linear(idx));
    for (int k = 0; k < field.d; ++k) out[k] += w * v[k];
  }
}

FieldHistory rescale_history(const FieldHistory& history, double lambda, std::optional<GridSpec> out_grid) {
  if (history.empty()) throw RangeError("rescale_history: empty history");
  if (!(lambda >= 1.0)) throw RangeError("rescale_history: lambda must be >= 1");
  const GridSpec& src = history.snapshots.front().grid;
  GridSpec dst;
  if (out_grid) {
    dst = *out_grid;
  } else {
    std::vector<int> sizes;
    std::vector<double> lengths;
    for (int a = 0; a < src.dim(); ++a) {
      sizes.push_back(src.size(a));
      lengths.push_back(src.length(a) / lambda);
    }
    dst = GridSpec::make(src.dim(), sizes, lengths);
  }
  if (dst.dim() != src.dim()) throw RangeError("rescale_history: output grid dimension mismatch");
  for (int a = 0; a < src.dim(); ++a) {
    const double ratio = lambda * dst.length(a) / src.length(a);
    if (std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 1.0) {
      throw RangeError("rescale_history: x -> lambda x does not map the output torus onto the simulated one");
    }
  }

  FieldHistory out;
  out.params = history.params;
  out.params.delta *= lambda;
  out.params.big_k *= lambda;
  out.snapshot_dt = history.snapshot_dt / (lambda * lambda);
  for (double dt : history.step_dts) out.step_dts.push_back(dt / (lambda * lambda));
  const int d = history.snapshots.front().d;
  for (const FieldMap& snap : history.snapshots) {
    FieldMap f(dst, d, snap.time / (lambda * lambda));
    std::array<double, kMaxDim> x{};
    for (std::size_t c = 0; c < dst.cell_count(); ++c) {
      for (int a = 0; a < dst.dim(); ++a) x[a] = lambda * dst.position(c, a);
      interpolate_at(snap, {x.data(), static_cast<std::size_t>(dst.dim())}, f.at(c));
    }
    out.snapshots.push_back(std::move(f));
  }
  return out;
}

}  // namespace pflow
