#pragma once

#include "pflow/grid.hpp"
#include "pflow/params.hpp"

#include <optional>
#include <span>
#include <vector>

namespace pflow {

/// One time slice of u on a periodic grid, values in R^d (d fastest).
struct FieldMap {
  GridSpec grid;
  int d = 1;
  double time = 0.0;
  std::vector<double> values;

  FieldMap() = default;
  FieldMap(GridSpec g, int dim, double t = 0.0)
      : grid(g), d(dim), time(t), values(g.cell_count() * static_cast<std::size_t>(dim), 0.0) {}

  [[nodiscard]] std::span<const double> at(std::size_t cell) const {
    return {values.data() + cell * static_cast<std::size_t>(d), static_cast<std::size_t>(d)};
  }
  [[nodiscard]] std::span<double> at(std::size_t cell) {
    return {values.data() + cell * static_cast<std::size_t>(d), static_cast<std::size_t>(d)};
  }
  [[nodiscard]] bool all_finite() const;
};

/// Per-cell d x n Jacobian, layout [cell][k][alpha].
struct GradientField {
  GridSpec grid;
  int d = 1;
  std::vector<double> data;

  [[nodiscard]] std::size_t block() const { return static_cast<std::size_t>(d * grid.dim()); }
  [[nodiscard]] const double* at(std::size_t cell) const { return data.data() + cell * block(); }
  [[nodiscard]] double operator()(std::size_t cell, int k, int alpha) const {
    return data[cell * block() + static_cast<std::size_t>(k * grid.dim() + alpha)];
  }
};

/// Per-cell d x n x n second derivatives, layout [cell][k][alpha][beta], symmetric in alpha/beta.
struct HessianField {
  GridSpec grid;
  int d = 1;
  std::vector<double> data;

  [[nodiscard]] std::size_t block() const {
    return static_cast<std::size_t>(d * grid.dim() * grid.dim());
  }
  [[nodiscard]] const double* at(std::size_t cell) const { return data.data() + cell * block(); }
  [[nodiscard]] double operator()(std::size_t cell, int k, int alpha, int beta) const {
    const int n = grid.dim();
    return data[cell * block() + static_cast<std::size_t>((k * n + alpha) * n + beta)];
  }
};

/// e_{delta,K}(u) = delta^2 + F_K(u) + |grad u|^2 per cell.
struct EnergyDensityField {
  GridSpec grid;
  std::vector<double> values;
};

/// Scalar grid function, used for densities and residual fields.
struct ScalarField {
  GridSpec grid;
  std::vector<double> values;
};

/// Centered second-order differences with periodic wrap.
GradientField gradient(const FieldMap& field);

/// D_alpha D_beta u from composing centered differences, symmetrized.
HessianField hessian(const FieldMap& field);
HessianField hessian(const GradientField& grad);

/// Same stencils on scalar fields.
std::vector<double> scalar_gradient(const ScalarField& f);  // layout [cell][alpha]
std::vector<double> scalar_hessian(const ScalarField& f);   // layout [cell][alpha][beta]

EnergyDensityField energy_density(const FieldMap& field, const FlowParams& params);
EnergyDensityField energy_density(const FieldMap& field, const GradientField& grad, const FlowParams& params);

/// Time-indexed snapshots at strictly increasing times.
struct FieldHistory {
  std::vector<FieldMap> snapshots;
  std::vector<double> step_dts;  ///< every dt actually taken, in order
  FlowParams params;
  double snapshot_dt = 0.0;
  std::optional<double> blowup_time;
  std::optional<std::size_t> blowup_cell;

  [[nodiscard]] bool empty() const { return snapshots.empty(); }
  [[nodiscard]] double t_begin() const { return snapshots.front().time; }
  [[nodiscard]] double t_end() const { return snapshots.back().time; }

  /// Appends a snapshot; throws RangeError unless its time exceeds the last one.
  void append(FieldMap snapshot);

  /// Index of the snapshot at time t (within tol), if any.
  [[nodiscard]] std::optional<std::size_t> find(double t, double tol = 1e-12) const;

  /// Linear interpolation between bracketing snapshots. RangeError outside [t_begin, t_end].
  [[nodiscard]] FieldMap at_time(double t) const;
};

/// Samples u^(lambda)(t, x) = u(lambda^2 t, lambda x) on `out_grid` (default:
/// same cell counts on the torus of period L / lambda) at times t_k / lambda^2.
/// Space uses periodic multilinear interpolation, time uses linear interpolation.
FieldHistory rescale_history(const FieldHistory& history, double lambda,
                             std::optional<GridSpec> out_grid = std::nullopt);

/// Periodic multilinear interpolation of a field at an arbitrary point.
void interpolate_at(const FieldMap& field, std::span<const double> x, std::span<double> out);

}  // namespace pflow
