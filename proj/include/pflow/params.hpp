#pragma once

#include "pflow/target.hpp"

namespace pflow {

enum class FlowKind {
  DeltaKFlow,          ///< penalized flow into R^d with -1/2 grad F_K
  DeltaFlowProjected,  ///< constrained flow, realized by stepping then projecting onto N
};

/// Symbols of the PDE: exponent p >= 2, regularization delta > 0, penalty K >= 0.
struct FlowParams {
  double p = 2.0;
  double delta = 0.1;
  double big_k = 0.0;
  FlowKind kind = FlowKind::DeltaKFlow;
  TargetSpec target = TargetSpec::flat(1);
  ChiProfile chi{0.5};

  /// Throws ValidationError for p < 2, delta <= 0, K < 0.
  void validate() const;

  /// Penalty weight actually entering the density: 0 for the projected flow.
  [[nodiscard]] double effective_k() const { return kind == FlowKind::DeltaFlowProjected ? 0.0 : big_k; }
};

FlowParams make_params(double p, double delta, double big_k, FlowKind kind, const TargetSpec& target);

}  // namespace pflow
