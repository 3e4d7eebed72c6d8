#pragma once

#include "pflow/field.hpp"
#include "pflow/monotonicity.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pflow {

/// Spacetime region scanned by the detector: stored snapshot times in [t_begin, t_end]
/// crossed with every `stride`-th node along each axis.
struct ScanWindow {
  double t_begin = 0.0;
  double t_end = 0.0;
  int stride = 1;
};

/// z is flagged iff Phi_z(s) >= eps0 for every s in scale_set.
std::vector<SpacetimePoint> flag_concentration(const FieldHistory& history, double eps0,
                                               const std::vector<double>& scale_set, const ScanWindow& window);

struct PackingResult {
  double r = 0.0;
  std::size_t count = 0;
  double estimate = 0.0;  ///< count * r^{n+2-p}
  std::vector<SpacetimePoint> centers;
};

/// Parabolic distance max(|dt|^{1/2}, |dx|); `lengths` makes |dx| periodic.
double parabolic_distance(const SpacetimePoint& a, const SpacetimePoint& b, const std::vector<double>& lengths = {});

/// Greedy disjoint packing of parabolic balls Q_r centred in flags, visited time-major then
/// lexicographically in space. Meaningful for r >= 2 max(h, sqrt(dt)).
PackingResult minkowski_content(const std::vector<SpacetimePoint>& flags, double r, double p, int n,
                                const std::vector<double>& lengths = {});

/// Sup of |grad u|_{delta,K} = e^{1/2} over the stored snapshots of the parabolic cylinder
/// P_r(z) = [t - r^2, t] x closed ball B_r(x), distances periodic. DomainError for r <= 0.
double cylinder_sup_grad(const FieldHistory& history, const SpacetimePoint& z, double radius);

struct RegularityWitness {
  SpacetimePoint z;
  double s_star = 0.0;    ///< scale in the set with the smallest Phi_z
  double phi_min = 0.0;
  double sup_grad = 0.0;  ///< cylinder_sup_grad at radius gamma sqrt(s_star)
};

/// Every window point with min_s Phi_z(s) < eps0, with its witnessing scale and cylinder sup.
std::vector<RegularityWitness> regularity_witnesses(const FieldHistory& history, double eps0,
                                                    const std::vector<double>& scale_set, const ScanWindow& window,
                                                    double gamma);

struct DecayFit {
  double beta = 0.0;
  double log_c = 0.0;
  double rms_residual = 0.0;      ///< in log units
  double exp_rms_residual = 0.0;  ///< same data fitted as log sup linear in t
  double r_squared = 0.0;
  bool gate_passed = false;
  std::size_t samples = 0;
};

/// Least-squares slope of log sup vs log t. DomainError with fewer than 8 samples or
/// non-positive entries. The power-law gate passes when rms_residual <= max_rms and the
/// power law fits at least twice as well as an exponential.
DecayFit decay_exponent_fit(const std::vector<double>& times, const std::vector<double>& sups, double max_rms = 0.1);

/// Same, on sup_x |grad u_t| over the snapshots inside [t_begin, t_end].
DecayFit decay_exponent_fit(const FieldHistory& history, double t_begin, double t_end, double max_rms = 0.1);

struct ConcentrationReport {
  double eps0 = 0.0;
  std::vector<SpacetimePoint> flags;
  std::vector<PackingResult> packings;
  std::optional<double> blowup_time;

  [[nodiscard]] std::string to_json() const;
};

/// eps0 default: 4 times the largest Phi observed on a reference history over the window.
double calibrate_eps0(const FieldHistory& reference, const std::vector<double>& scale_set, const ScanWindow& window);

}  // namespace pflow
