#pragma once

#include "pflow/field.hpp"

#include <span>
#include <vector>

namespace pflow {

/// Spacetime point z = (t, x).
struct SpacetimePoint {
  double t = 0.0;
  std::vector<double> x;
};

struct PhiSample {
  double t = 0.0;
  std::vector<double> x;
  double s = 0.0;
  double value = 0.0;
  double exact_derivative = 0.0;
  double fd_derivative = 0.0;
  double tail_bound = 0.0;
};

/// Images per axis so the first omitted shell contributes below 1e-14.
int default_images(double s, double length, int n);

/// Sum over lattice shifts k in {-W..W}^n of the Gaussian heat kernel at x + k L.
/// images = 0 picks default_images per axis. DomainError for s <= 0.
double heat_kernel_periodized(double s, std::span<const double> x, const GridSpec& grid, int images = 0);

/// Periodization error estimate exp(-L_min^2 / (4 s)).
double tail_bound(double s, const GridSpec& grid);

/// Largest admissible scale (L_min / 8)^2.
double max_valid_scale(const GridSpec& grid);

/// 4 max(h^2, dt): below this the kernel is not resolved.
double min_scan_scale(const GridSpec& grid, double dt);

/// s_min * 2^j for every j with s_min * 2^j <= s_max.
std::vector<double> dyadic_scales(double s_min, double s_max);

/// Phi_z(s) = s^{p/2} H_s e^{p/2}(x) evaluated on u_{t-s}.
/// ScaleOutOfRangeError when s > t or s > max_valid_scale, RangeError when t - s is not covered.
double phi(const FieldHistory& history, const SpacetimePoint& z, double s);

/// The exact derivative formula in s, with du/dt from the rhs at the interpolated slice.
double phi_derivative_exact(const FieldHistory& history, const SpacetimePoint& z, double s);

/// Centered difference (Phi(s + ds) - Phi(s - ds)) / (2 ds).
double phi_fd(const FieldHistory& history, const SpacetimePoint& z, double s, double ds);

/// s^{p/2} H_s(|grad u|_delta^p - delta^p), no penalty in the density.
double phi_reduced(const FieldHistory& history, const SpacetimePoint& z, double s);

/// All of the above at one (z, s); fd step is fd_fraction * s.
PhiSample phi_sample(const FieldHistory& history, const SpacetimePoint& z, double s, double fd_fraction = 0.05);

/// Phi_{(t, x_j)}(s) at every grid node x_j, via separable periodic convolution.
/// reduced = true subtracts the delta floor and drops the penalty, as in phi_reduced.
ScalarField phi_field(const FieldHistory& history, double t, double s, bool reduced = false);

struct LocalGlobalComparison {
  double lhs = 0.0;        ///< Phi_{z0}(s), s = (eta r)^2
  double rhs_local = 0.0;  ///< (eta r)^{p-n} integral over B_r(x0) of e^{p/2} at t0 - s
  double rhs_tail = 0.0;   ///< 2^{n/2} eta^{-n} exp(-1/(8 eta^2)) Phi_{(t0 + r^2, x0)}(s + r^2)
  double prefactor = 0.0;  ///< eta^{-n} exp(-1/(8 eta^2))
  double empirical_c = 0.0; ///< smallest C with lhs <= rhs_local + C * prefactor * Phi_{(t0 + r^2, x0)}(s + r^2)
};

/// Both Phi values read the slice at t0 - s, which is the only time that must be covered.
LocalGlobalComparison local_global_compare(const FieldHistory& history, const SpacetimePoint& z0, double r,
                                           double eta);

}  // namespace pflow
