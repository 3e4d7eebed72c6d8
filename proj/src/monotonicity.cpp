#include "pflow/monotonicity.hpp"

#include "pflow/errors.hpp"
#include "pflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace pflow {

namespace {

// Per-axis image moments of the 1D kernel at the nodes: M0 = sum rho, M1 = sum rho d, M2 = sum rho d^2,
// with d = y + kL - x the displacement to the k-th image.
struct AxisMoments {
  std::vector<double> m0, m1, m2;
};

AxisMoments axis_moments(const GridSpec& g, int axis, double s, double x) {
  const int size = g.size(axis);
  const double len = g.length(axis);
  const double h = g.spacing(axis);
  const int w = default_images(s, len, g.dim());
  const double norm = 1.0 / std::sqrt(4.0 * std::numbers::pi * s);
  AxisMoments m{std::vector<double>(static_cast<std::size_t>(size)), std::vector<double>(static_cast<std::size_t>(size)),
                std::vector<double>(static_cast<std::size_t>(size))};
  // Reduce x into [0, L) so the image window stays centred.
  const double xr = x - len * std::floor(x / len);
  for (int i = 0; i < size; ++i) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    const double base = i * h - xr;
    for (int k = -w - 1; k <= w + 1; ++k) {
      const double d = base + k * len;
      const double r = norm * std::exp(-d * d / (4.0 * s));
      s0 += r;
      s1 += r * d;
      s2 += r * d * d;
    }
    m.m0[static_cast<std::size_t>(i)] = s0;
    m.m1[static_cast<std::size_t>(i)] = s1;
    m.m2[static_cast<std::size_t>(i)] = s2;
  }
  return m;
}

void check_scale(const GridSpec& g, double s, double t, const char* op) {
  if (!(s > 0.0)) throw DomainError(std::string(op) + ": scale must be positive");
  const double smax = max_valid_scale(g);
  if (s > smax * (1.0 + 1e-12)) {
    throw ScaleOutOfRangeError(std::string(op) + ": s = " + std::to_string(s) + " exceeds (L_min/8)^2 = " +
                               std::to_string(smax));
  }
  if (s > t * (1.0 + 1e-12) + 1e-15) {
    throw ScaleOutOfRangeError(std::string(op) + ": s = " + std::to_string(s) + " exceeds t = " + std::to_string(t));
  }
}

FieldMap slice(const FieldHistory& history, double time, const char* op) {
  if (history.empty()) throw RangeError(std::string(op) + ": empty history");
  const double tol = 1e-12 * std::max(1.0, std::abs(time));
  if (time < history.t_begin() - tol || time > history.t_end() + tol) {
    throw RangeError(std::string(op) + ": time " + std::to_string(time) + " not covered by the history");
  }
  FieldMap u = history.at_time(std::clamp(time, history.t_begin(), history.t_end()));
  const FlowParams& params = history.params;
  if (params.kind == FlowKind::DeltaFlowProjected && !params.target.is_flat()) {
    for (std::size_t c = 0; c < u.grid.cell_count(); ++c) params.target.project_into(u.at(c), u.at(c));
  }
  return u;
}

std::vector<AxisMoments> all_moments(const GridSpec& g, std::span<const double> x, double s, const char* op) {
  if (x.size() != static_cast<std::size_t>(g.dim())) throw DomainError(std::string(op) + ": centre has the wrong dimension");
  std::vector<AxisMoments> out;
  for (int a = 0; a < g.dim(); ++a) out.push_back(axis_moments(g, a, s, x[static_cast<std::size_t>(a)]));
  return out;
}

double kernel_weight(const GridSpec& g, const std::vector<AxisMoments>& m, std::size_t cell) {
  double w = 1.0;
  for (int a = 0; a < g.dim(); ++a) w *= m[static_cast<std::size_t>(a)].m0[static_cast<std::size_t>(g.coord(cell, a))];
  return w;
}

// s^{p/2} H_s(density)(x) for a per-cell density.
double heat_average(const GridSpec& g, std::span<const double> x, double s, const std::vector<double>& density,
                    double p, const char* op) {
  const auto m = all_moments(g, x, s, op);
  double acc = 0.0;
  for (std::size_t c = 0; c < g.cell_count(); ++c) acc += density[c] * kernel_weight(g, m, c);
  return std::pow(s, 0.5 * p) * acc * g.cell_volume();
}

std::vector<double> density_p(const FieldMap& u, const FlowParams& params) {
  const EnergyDensityField e = energy_density(u, params);
  std::vector<double> out(e.values.size());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = std::pow(e.values[c], 0.5 * params.p);
  return out;
}

double phi_on_slice(const FieldMap& u, const FlowParams& params, std::span<const double> x, double s, const char* op) {
  return heat_average(u.grid, x, s, density_p(u, params), params.p, op);
}

}  // namespace

int default_images(double s, double length, int n) {
  // First omitted image sits at least (W + 1/2) L away; demand its weight times the peak of the
  // remaining axes stays below 1e-14.
  const double peak = std::max(0.0, -std::log(4.0 * std::numbers::pi * s)) * 0.5 * n;
  const double need = std::log(1e14) + peak;
  const double reach = std::sqrt(4.0 * s * need);
  return std::max(1, static_cast<int>(std::ceil(reach / length - 0.5)));
}

double heat_kernel_periodized(double s, std::span<const double> x, const GridSpec& grid, int images) {
  if (!(s > 0.0)) throw DomainError("heat_kernel_periodized: s must be positive");
  if (images < 0) throw DomainError("heat_kernel_periodized: images must be >= 1");
  if (x.size() != static_cast<std::size_t>(grid.dim())) throw DomainError("heat_kernel_periodized: offset dimension");
  const double norm = 1.0 / std::sqrt(4.0 * std::numbers::pi * s);
  double out = 1.0;
  for (int a = 0; a < grid.dim(); ++a) {
    const double len = grid.length(a);
    const int w = images > 0 ? images : default_images(s, len, grid.dim());
    const double xa = x[static_cast<std::size_t>(a)];
    // pair +k with -k so kernel(x) == kernel(-x) bit for bit
    double acc = norm * std::exp(-xa * xa / (4.0 * s));
    for (int k = 1; k <= w; ++k) {
      const double dp = xa + k * len;
      const double dm = xa - k * len;
      const double ep = norm * std::exp(-dp * dp / (4.0 * s));
      const double em = norm * std::exp(-dm * dm / (4.0 * s));
      acc += std::min(ep, em) + std::max(ep, em);
    }
    out *= acc;
  }
  return out;
}

double tail_bound(double s, const GridSpec& grid) {
  const double l = grid.min_length();
  return std::exp(-l * l / (4.0 * s));
}

double max_valid_scale(const GridSpec& grid) {
  const double l = grid.min_length() / 8.0;
  return l * l;
}

double min_scan_scale(const GridSpec& grid, double dt) {
  const double h = grid.min_spacing();
  return 4.0 * std::max(h * h, dt);
}

std::vector<double> dyadic_scales(double s_min, double s_max) {
  if (!(s_min > 0.0)) throw DomainError("dyadic_scales: s_min must be positive");
  std::vector<double> out;
  for (double s = s_min; s <= s_max * (1.0 + 1e-12); s *= 2.0) out.push_back(s);
  return out;
}

double phi(const FieldHistory& history, const SpacetimePoint& z, double s) {
  if (history.empty()) throw RangeError("phi: empty history");
  check_scale(history.snapshots.front().grid, s, z.t, "phi");
  const FieldMap u = slice(history, z.t - s, "phi");
  return phi_on_slice(u, history.params, z.x, s, "phi");
}

double phi_derivative_exact(const FieldHistory& history, const SpacetimePoint& z, double s) {
  const char* op = "phi_derivative_exact";
  if (history.empty()) throw RangeError(std::string(op) + ": empty history");
  const GridSpec& g = history.snapshots.front().grid;
  check_scale(g, s, z.t, op);
  const FlowParams& params = history.params;
  const double p = params.p;
  const FieldMap u = slice(history, z.t - s, op);
  const GradientField grad = gradient(u);
  const EnergyDensityField e = energy_density(u, grad, params);
  const FieldMap ut = rhs(u, params);
  const auto m = all_moments(g, z.x, s, op);
  const int n = g.dim();
  const int d = u.d;
  const double k = params.effective_k();
  std::vector<double> scratch(static_cast<std::size_t>(d));
  double acc = 0.0;
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    std::array<double, kMaxDim> m0{}, m1{}, m2{};
    double prod0 = 1.0;
    for (int a = 0; a < n; ++a) {
      const auto i = static_cast<std::size_t>(g.coord(c, a));
      m0[a] = m[a].m0[i];
      m1[a] = m[a].m1[i];
      m2[a] = m[a].m2[i];
      prod0 *= m0[a];
    }
    if (prod0 == 0.0) continue;
    // Moment of the kernel times d_alpha (and d_alpha d_beta) across the product of per-axis image sums.
    auto first = [&](int a) { return prod0 / m0[a] * m1[a]; };
    auto second = [&](int a, int b) {
      return a == b ? prod0 / m0[a] * m2[a] : prod0 / (m0[a] * m0[b]) * m1[a] * m1[b];
    };
    const double* gu = grad.at(c);
    const auto v = ut.at(c);
    double vt2 = 0.0;
    for (double x : v) vt2 += x * x;
    const double fk = k != 0.0 ? params.target.penalty_and_grad_into(params.chi, u.at(c), k, scratch) : 0.0;
    double term = prod0 * (2.0 * s * s * vt2 + s * params.delta * params.delta + s * fk);
    for (int a = 0; a < n; ++a) {
      double dot = 0.0;
      for (int kk = 0; kk < d; ++kk) dot += v[static_cast<std::size_t>(kk)] * gu[kk * n + a];
      term -= 2.0 * s * first(a) * dot;
    }
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        double dot = 0.0;
        for (int kk = 0; kk < d; ++kk) dot += gu[kk * n + a] * gu[kk * n + b];
        term += 0.5 * second(a, b) * dot;
      }
    }
    acc += std::pow(e.values[c], 0.5 * (p - 2.0)) * term;
  }
  return 0.5 * p * std::pow(s, 0.5 * (p - 4.0)) * acc * g.cell_volume();
}

double phi_fd(const FieldHistory& history, const SpacetimePoint& z, double s, double ds) {
  if (!(ds > 0.0) || !(ds < s)) throw DomainError("phi_fd: need 0 < ds < s");
  return (phi(history, z, s + ds) - phi(history, z, s - ds)) / (2.0 * ds);
}

double phi_reduced(const FieldHistory& history, const SpacetimePoint& z, double s) {
  const char* op = "phi_reduced";
  if (history.empty()) throw RangeError(std::string(op) + ": empty history");
  check_scale(history.snapshots.front().grid, s, z.t, op);
  const FieldMap u = slice(history, z.t - s, op);
  const FlowParams& params = history.params;
  FlowParams plain = params;
  plain.kind = FlowKind::DeltaFlowProjected;  // density without the penalty
  const EnergyDensityField e = energy_density(u, plain);
  const double floor = std::pow(params.delta, params.p);
  std::vector<double> dens(e.values.size());
  for (std::size_t c = 0; c < dens.size(); ++c) dens[c] = std::pow(e.values[c], 0.5 * params.p) - floor;
  return heat_average(u.grid, z.x, s, dens, params.p, op);
}

ScalarField phi_field(const FieldHistory& history, double t, double s, bool reduced) {
  const char* op = "phi_field";
  if (history.empty()) throw RangeError(std::string(op) + ": empty history");
  const GridSpec& g = history.snapshots.front().grid;
  check_scale(g, s, t, op);
  const FieldMap u = slice(history, t - s, op);
  const FlowParams& params = history.params;
  std::vector<double> dens;
  if (reduced) {
    FlowParams plain = params;
    plain.kind = FlowKind::DeltaFlowProjected;
    const EnergyDensityField e = energy_density(u, plain);
    const double floor = std::pow(params.delta, params.p);
    dens.resize(e.values.size());
    for (std::size_t c = 0; c < dens.size(); ++c) dens[c] = std::pow(e.values[c], 0.5 * params.p) - floor;
  } else {
    dens = density_p(u, params);
  }
  // kernel depends on the node offset only, so one 1D stencil per axis
  std::vector<double> work = dens;
  std::vector<double> line;
  for (int a = 0; a < g.dim(); ++a) {
    const int size = g.size(a);
    const std::vector<double> ker = axis_moments(g, a, s, 0.0).m0;
    const std::size_t stride = g.stride(a);
    std::vector<double> next(work.size());
    line.resize(static_cast<std::size_t>(size));
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
      if (g.coord(c, a) != 0) continue;
      for (int i = 0; i < size; ++i) line[static_cast<std::size_t>(i)] = work[c + static_cast<std::size_t>(i) * stride];
      for (int i = 0; i < size; ++i) {
        double acc = 0.0;
        for (int j = 0; j < size; ++j) acc += line[static_cast<std::size_t>(j)] * ker[static_cast<std::size_t>(((j - i) % size + size) % size)];
        next[c + static_cast<std::size_t>(i) * stride] = acc;
      }
    }
    work = std::move(next);
  }
  const double scale = std::pow(s, 0.5 * params.p) * g.cell_volume();
  for (double& v : work) v *= scale;
  return ScalarField{g, std::move(work)};
}

PhiSample phi_sample(const FieldHistory& history, const SpacetimePoint& z, double s, double fd_fraction) {
  PhiSample out;
  out.t = z.t;
  out.x = z.x;
  out.s = s;
  out.value = phi(history, z, s);
  out.exact_derivative = phi_derivative_exact(history, z, s);
  out.fd_derivative = phi_fd(history, z, s, fd_fraction * s);
  out.tail_bound = tail_bound(s, history.snapshots.front().grid);
  return out;
}

LocalGlobalComparison local_global_compare(const FieldHistory& history, const SpacetimePoint& z0, double r,
                                           double eta) {
  const char* op = "local_global_compare";
  if (!(r > 0.0) || !(eta > 0.0) || !(eta < 1.0)) throw DomainError(std::string(op) + ": need r > 0 and 0 < eta < 1");
  if (history.empty()) throw RangeError(std::string(op) + ": empty history");
  const GridSpec& g = history.snapshots.front().grid;
  const FlowParams& params = history.params;
  const int n = g.dim();
  const double s = eta * eta * r * r;
  check_scale(g, s, z0.t, op);
  check_scale(g, s + r * r, z0.t + r * r, op);
  if (2.0 * r > g.min_length()) throw DomainError(std::string(op) + ": ball wraps around the torus");
  const FieldMap u = slice(history, z0.t - s, op);
  const std::vector<double> dens = density_p(u, params);

  LocalGlobalComparison out;
  out.lhs = heat_average(g, z0.x, s, dens, params.p, op);
  const double tail_phi = heat_average(g, z0.x, s + r * r, dens, params.p, op);
  double ball = 0.0;
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    double d2 = 0.0;
    for (int a = 0; a < n; ++a) {
      const double len = g.length(a);
      double d = std::fmod(std::abs(g.position(c, a) - z0.x[static_cast<std::size_t>(a)]), len);
      d = std::min(d, len - d);
      d2 += d * d;
    }
    if (d2 < r * r) ball += dens[c];
  }
  out.rhs_local = std::pow(eta * r, params.p - n) * ball * g.cell_volume();
  out.prefactor = std::pow(eta, -n) * std::exp(-1.0 / (8.0 * eta * eta));
  out.rhs_tail = std::pow(2.0, 0.5 * n) * out.prefactor * tail_phi;
  const double denom = out.prefactor * tail_phi;
  out.empirical_c = denom > 0.0 ? std::max(0.0, (out.lhs - out.rhs_local) / denom) : 0.0;
  return out;
}

}  // namespace pflow
