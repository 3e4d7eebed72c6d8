#include "pflow/initial_data.hpp"

#include "pflow/errors.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace pflow {

namespace {

void project_all(FieldMap& u, const TargetSpec& target) {
  if (target.is_flat()) return;
  for (std::size_t c = 0; c < u.grid.cell_count(); ++c) target.project_into(u.at(c), u.at(c));
}

void check_dim(const TargetSpec& target, const std::vector<double>& v, const char* what) {
  if (v.size() != static_cast<std::size_t>(target.ambient_dim())) {
    throw DomainError(std::string(what) + ": vector length does not match the target dimension");
  }
}

// C^2 step: 1 on [0, a], 0 beyond b.
double fade(double r, double a, double b) {
  if (r <= a) return 1.0;
  if (r >= b) return 0.0;
  const double x = (r - a) / (b - a);
  return 1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
}

}  // namespace

FieldMap constant_map(const GridSpec& grid, const TargetSpec& target, const std::vector<double>& q) {
  check_dim(target, q, "constant_map");
  FieldMap u(grid, target.ambient_dim());
  for (std::size_t c = 0; c < grid.cell_count(); ++c) std::copy(q.begin(), q.end(), u.at(c).begin());
  project_all(u, target);
  return u;
}

FieldMap fourier_map(const GridSpec& grid, const TargetSpec& target, const std::vector<double>& q, int axis, int mode,
                     double amplitude, const std::vector<double>& direction) {
  check_dim(target, q, "fourier_map");
  check_dim(target, direction, "fourier_map");
  if (axis < 0 || axis >= grid.dim()) throw DomainError("fourier_map: axis out of range");
  FieldMap u(grid, target.ambient_dim());
  const double w = 2.0 * std::numbers::pi * mode / grid.length(axis);
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    const double s = amplitude * std::sin(w * grid.position(c, axis));
    auto v = u.at(c);
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = q[k] + s * direction[k];
  }
  project_all(u, target);
  return u;
}

FieldMap random_smooth_map(const GridSpec& grid, const TargetSpec& target, const std::vector<double>& q,
                           std::uint64_t seed, int modes, double amplitude) {
  check_dim(target, q, "random_smooth_map");
  if (modes < 1) throw DomainError("random_smooth_map: modes must be >= 1");
  const int n = grid.dim();
  const int d = target.ambient_dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  FieldMap u = FieldMap(grid, d);
  for (std::size_t c = 0; c < grid.cell_count(); ++c) std::copy(q.begin(), q.end(), u.at(c).begin());

  // wavevectors in a fixed order; coefficients drawn in that order
  std::array<int, kMaxDim> k{0, 0, 0};
  const int span = 2 * modes + 1;
  int total = 1;
  for (int a = 0; a < n; ++a) total *= span;
  std::vector<double> phase(grid.cell_count());
  for (int idx = 0; idx < total; ++idx) {
    int rem = idx;
    double k2 = 0.0;
    for (int a = n - 1; a >= 0; --a) {
      k[static_cast<std::size_t>(a)] = rem % span - modes;
      rem /= span;
      k2 += static_cast<double>(k[static_cast<std::size_t>(a)] * k[static_cast<std::size_t>(a)]);
    }
    if (k2 == 0.0) continue;
    std::vector<double> ca(static_cast<std::size_t>(d)), sa(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      ca[static_cast<std::size_t>(i)] = normal(rng);
      sa[static_cast<std::size_t>(i)] = normal(rng);
    }
    const double weight = amplitude / std::sqrt(k2);
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
      double arg = 0.0;
      for (int a = 0; a < n; ++a) {
        arg += 2.0 * std::numbers::pi * k[static_cast<std::size_t>(a)] * grid.position(c, a) / grid.length(a);
      }
      const double cs = std::cos(arg);
      const double sn = std::sin(arg);
      auto v = u.at(c);
      for (int i = 0; i < d; ++i) {
        v[static_cast<std::size_t>(i)] += weight * (ca[static_cast<std::size_t>(i)] * cs + sa[static_cast<std::size_t>(i)] * sn);
      }
    }
  }
  project_all(u, target);
  return u;
}

FieldMap equivariant_degree1_map(const GridSpec& grid, const std::vector<double>& center, double scale) {
  if (grid.dim() != 2) throw DomainError("equivariant_degree1_map: needs a 2D grid");
  if (center.size() != 2) throw DomainError("equivariant_degree1_map: centre needs 2 entries");
  if (!(scale > 0.0)) throw DomainError("equivariant_degree1_map: scale must be positive");
  const double outer = grid.min_length() / 3.0;
  FieldMap u(grid, 3);
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    double dx[2];
    for (int a = 0; a < 2; ++a) {
      const double len = grid.length(a);
      double d = grid.position(c, a) - center[static_cast<std::size_t>(a)];
      d -= len * std::round(d / len);
      dx[a] = d;
    }
    const double r = std::hypot(dx[0], dx[1]);
    auto v = u.at(c);
    if (r < 1e-14) {
      v[0] = 0.0;
      v[1] = 0.0;
      v[2] = -1.0;
      continue;
    }
    const double theta = 2.0 * std::atan(scale / r) * fade(r, 0.5 * outer, outer);
    v[0] = std::sin(theta) * dx[0] / r;
    v[1] = std::sin(theta) * dx[1] / r;
    v[2] = std::cos(theta);
  }
  return u;
}

FieldMap make_initial(const RunConfig& cfg) {
  const InitialSpec& s = cfg.initial;
  const TargetSpec& target = cfg.flow.target;
  switch (s.kind) {
    case InitialKind::Constant:
      return constant_map(cfg.grid, target, s.q);
    case InitialKind::Fourier:
      return fourier_map(cfg.grid, target, s.q, s.axis, s.mode, s.amplitude, s.direction);
    case InitialKind::RandomSmooth:
      return random_smooth_map(cfg.grid, target, s.q, s.seed, s.modes, s.amplitude);
    case InitialKind::EquivariantDegree1:
      return equivariant_degree1_map(cfg.grid, s.center, s.scale);
  }
  throw DomainError("make_initial: unknown initial kind");
}

}  // namespace pflow
