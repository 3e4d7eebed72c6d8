#pragma once

#include "pflow/field.hpp"
#include "pflow/params.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>

namespace pflow {

/// Non-divergence coefficients: operator = sum a^{k,i}_{alpha,beta} d_{alpha beta} u^i + b^k.
struct CoefficientTensor {
  int n = 1;
  int d = 1;
  std::vector<double> a;  ///< layout [alpha][beta][k][i]
  Eigen::VectorXd b;

  [[nodiscard]] double operator()(int alpha, int beta, int k, int i) const {
    return a[static_cast<std::size_t>(((alpha * n + beta) * d + k) * d + i)];
  }
  /// sum a^{k,i}_{alpha,beta} h^k_alpha h^i_beta for h of shape d x n.
  [[nodiscard]] double quadratic_form(const Eigen::MatrixXd& h) const;
};

CoefficientTensor coefficients(const Eigen::MatrixXd& grad_u, const Eigen::VectorXd& u, const FlowParams& params);

struct EllipticityBounds {
  double min;
  double max;
};

/// Extremes of the Rayleigh quotient over random unit Hilbert-Schmidt directions.
EllipticityBounds ellipticity_bounds(const CoefficientTensor& a, int trials, std::uint64_t seed = 1);

struct StepControl {
  double cfl_sigma = 0.4;
  double penalty_sigma = 0.5;
  double t_end = 0.0;
  double snapshot_dt = 0.0;  ///< 0 stores every step
  std::optional<double> dt_override;

  void validate() const;
};

/// du/dt of the selected flow, evaluated in non-divergence form.
FieldMap rhs(const FieldMap& field, const FlowParams& params);

/// Divergence-form evaluation |grad u|_delta^{2-p} div(|grad u|_delta^{p-2} grad u) for flat
/// targets with K = 0; exists as an independent cross-check of rhs.
FieldMap rhs_divergence_form(const FieldMap& field, const FlowParams& params);

/// min(cfl_sigma h_min^2 / (2 n (p-1)), penalty_sigma / max(K^2, 1)).
double stable_dt(const FlowParams& params, const GridSpec& grid, const StepControl& control);

/// Forward Euler; the projected flow re-projects every point onto N.
/// Throws BlowupDetected on non-finite output.
FieldMap step(const FieldMap& field, double dt, const FlowParams& params);

/// Called with the initial field and after every step.
using StepObserver = std::function<void(const FieldMap&)>;

/// Integrates to control.t_end. Blow-up ends the run early and is recorded on the history.
FieldHistory run(const FieldMap& initial, const FlowParams& params, const StepControl& control,
                 const StepObserver& observer = {});

/// Takes `steps` further steps of size dt from the last snapshot, storing each one.
void advance(FieldHistory& history, int steps, double dt);

}  // namespace pflow
