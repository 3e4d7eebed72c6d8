#pragma once

#include "pflow/field.hpp"
#include "pflow/params.hpp"

#include <vector>

namespace pflow {

/// One row of the energy series.
struct DiagnosticsRecord {
  double time = 0.0;
  double total_energy = 0.0;
  double dissipation = 0.0;  ///< integral of e^{(p-2)/2} |du/dt|^2
  double sup_grad = 0.0;     ///< sup of e^{1/2}
  double bochner_linf = 0.0; ///< NaN where no centered time difference exists
  double bochner_l2 = 0.0;
  double w22_integral = 0.0; ///< spatial integral of (|grad F_K|^2 + |hess u|^2) e^{(p-2)/2} at this time
};

/// (1/p) sum_cells e^{p/2} * cell volume.
double total_energy(const FieldMap& field, const FlowParams& params);

/// Integral of e^{(p-2)/2} |du/dt|^2 with du/dt from the rhs.
double dissipation_integral(const FieldMap& field, const FlowParams& params);

/// |dE/dt + dissipation| / (|dE/dt| + 1) at the stored snapshot at time t, with dE/dt the
/// centered difference over the neighbouring snapshots. RangeError at the boundary or off-snapshot.
double dissipation_residual(const FieldHistory& history, double t);

/// Laplacian of psi plus (p-2)/e * sum_i hess psi(grad u^i, grad u^i).
ScalarField apply_A(const ScalarField& psi, const GradientField& grad_u, const EnergyDensityField& e,
                    const FlowParams& params);

struct BochnerResidual {
  ScalarField field;
  double linf = 0.0;
  double l2 = 0.0;
};

/// (d_t - A) e^{p/2} minus the explicit right-hand side, at the snapshot at time t.
/// DomainError for projected histories on curved targets, RangeError at boundary times.
BochnerResidual bochner_residual(const FieldHistory& history, double t);

struct BochnerMargin {
  double min_margin = 0.0;   ///< min over cells of C e^{(p+2)/2} - (d_t - A) e^{p/2}
  double empirical_c = 0.0;  ///< smallest C >= 0 with a nonnegative margin everywhere
};

BochnerMargin bochner_inequality_check(const FieldHistory& history, double t, double c);

/// sup_{t,x} |grad u|_delta - sup_x |grad u_0|_delta. DomainError unless the target is flat.
double max_principle_check(const FieldHistory& history);

/// Parabolic cylinder P_r(t, x) = (t - r^2, t] x B_r(x) on the torus.
struct ParabolicWindow {
  double t = 0.0;
  std::vector<double> center;
  double radius = 0.0;
};

struct WeightedHessianResult {
  double integral = 0.0;    ///< over P_r
  double reference = 0.0;   ///< integral of e^{p/2} + e^{(p+2)/2} over P_{4r}, clipped to the history
  double ratio = 0.0;       ///< integral / reference
};

/// Weighted second-order integral over the window, compared against the outer cylinder.
/// Times are integrated with the trapezoid rule over the stored snapshots.
/// DomainError when the window holds fewer than two snapshots or no cells.
WeightedHessianResult weighted_hessian_integral(const FieldHistory& history, const ParabolicWindow& window);

struct LocalEnergyResult {
  double inner = 0.0;  ///< integral of e^{(p-2)/2} |du/dt|^2 over P_r
  double outer = 0.0;  ///< integral of e^{p/2} over P_{2r}
  double ratio = 0.0;
};

LocalEnergyResult local_energy_ratio(const FieldHistory& history, const ParabolicWindow& window);

/// One record per stored snapshot; disabled columns are NaN.
std::vector<DiagnosticsRecord> diagnostics_series(const FieldHistory& history, bool with_bochner = true,
                                                  bool with_w22 = true);

}  // namespace pflow
