#pragma once

#include "pflow/concentration.hpp"
#include "pflow/config.hpp"
#include "pflow/field.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace pflow {

struct HarnessOptions {
  std::string out_dir;  ///< overrides output.dir when non-empty
  bool strict = false;  ///< warnings count as failures
};

/// One checked property. Failures and, under --strict, warnings make the exit code non-zero.
struct Assertion {
  std::string module;
  std::string operation;
  std::string property;
  bool passed = true;
  bool warning = false;
  std::string measured;
  std::string expected;
};

struct SweepRow {
  double k = 0.0;
  double sup_k2_dist2 = 0.0;  ///< sup over every step and cell of K^2 dist^2(u_K, N)
  double sup_k_dist = 0.0;    ///< sup of K dist(u_K, N)
  double sup_grad = 0.0;      ///< sup of |grad u_K|
  double l2_to_delta_flow = 0.0;
};

struct SweepResult {
  double common_dt = 0.0;
  std::vector<SweepRow> rows;
  double scheme_error = -1.0;  ///< L2 gap of the projected flow between N and 2N, negative when skipped
  double eps0 = 0.0;
  std::size_t witness_points = 0;   ///< final-time points left unflagged for every K
  double witness_sup = 0.0;         ///< largest cylinder sup over those points and all K
  double witness_variation = 0.0;   ///< max over those points of max_K/min_K - 1 of the cylinder sup
};

/// Runs the (delta,K)-flow for every K in cfg.k_list and the projected flow from the same
/// initial data, all with the stable step of the largest K. Points left unflagged at the final
/// time are compared across K through the sup of |grad u| on P_{gamma sqrt(s*)}(z).
SweepResult sweep_k(const RunConfig& cfg, bool with_scheme_error);

/// L2 distance between two fields, sampling `fine` at the nodes of `coarse` when it is a refinement.
double l2_distance(const FieldMap& coarse, const FieldMap& fine);

void save_history(const FieldHistory& history, const std::string& dir);
FieldHistory load_history(const std::string& dir, const FlowParams& params);

/// Dispatches run | diagnose | phi | sweep-k | detect | report. Returns the process exit code.
int run_command(const std::string& name, const RunConfig& cfg, const HarnessOptions& options, std::ostream& log);

}  // namespace pflow
