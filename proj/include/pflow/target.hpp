#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace pflow {

/// C^2 truncation profile applied to the squared distance.
///
/// Identity below r0^2, constant 4 r0^2 above 4 r0^2, and a quintic Hermite
/// blend in between matching value, slope and curvature at both junctions.
class ChiProfile {
public:
  struct Value {
    double chi;
    double d1;
    double d2;
  };

  explicit ChiProfile(double r0 = 0.5);

  [[nodiscard]] double r0() const { return r0_; }
  [[nodiscard]] Value eval(double t) const;

private:
  double r0_;
  double lo_;
  double hi_;
};

enum class TargetKind { Flat, Sphere };

/// Embedded target N in R^d: the unit sphere S^{d-1} or all of R^d.
class TargetSpec {
public:
  static TargetSpec flat(int d);
  static TargetSpec sphere(int d, double r0 = 0.5);

  [[nodiscard]] TargetKind kind() const { return kind_; }
  [[nodiscard]] int ambient_dim() const { return d_; }
  [[nodiscard]] double r0() const { return r0_; }
  [[nodiscard]] bool is_flat() const { return kind_ == TargetKind::Flat; }

  /// Nearest-point projection. Throws CutLocusError at the sphere's centre.
  void project_into(std::span<const double> y, std::span<double> out) const;
  [[nodiscard]] Eigen::VectorXd project(const Eigen::VectorXd& y) const;

  [[nodiscard]] double dist_sq(std::span<const double> y) const;
  [[nodiscard]] double dist_sq(const Eigen::VectorXd& y) const;

  /// F_K(y) = K^2 chi(dist^2); gradient written to grad (length d).
  double penalty_and_grad_into(const ChiProfile& chi, std::span<const double> y, double big_k,
                               std::span<double> grad) const;

  /// Unscaled Hessian of F = chi(dist^2), row-major d*d written to out.
  void hess_f_into(const ChiProfile& chi, std::span<const double> y, std::span<double> out) const;

private:
  TargetSpec(TargetKind kind, int d, double r0) : kind_(kind), d_(d), r0_(r0) {}

  TargetKind kind_;
  int d_;
  double r0_;
};

struct PenaltyValue {
  double value;
  Eigen::VectorXd grad;
};

Eigen::VectorXd project(const TargetSpec& target, const Eigen::VectorXd& y);
double dist_sq(const TargetSpec& target, const Eigen::VectorXd& y);
ChiProfile::Value chi_eval(const ChiProfile& profile, double t);
PenaltyValue penalty_and_grad(const TargetSpec& target, const ChiProfile& profile,
                              const Eigen::VectorXd& y, double big_k);
Eigen::MatrixXd hess_F(const TargetSpec& target, const ChiProfile& profile, const Eigen::VectorXd& y);

/// max over samples of max(0, -lambda_min(hess F)) / F^{1/2}.
/// Every sample must satisfy 0 < dist^2 < r0^2.
double hessF_bound_ratio(const TargetSpec& target, const ChiProfile& profile,
                         const std::vector<Eigen::VectorXd>& samples);

/// sum_alpha A_u(d_alpha u, d_alpha u) for u on N, grad_u of shape d x n.
Eigen::VectorXd second_fundamental_contraction(const TargetSpec& target, const Eigen::VectorXd& u,
                                               const Eigen::MatrixXd& grad_u);

/// Rm(X, Y, Y, X) for X, Y tangent to N at u.
double curvature_quartic(const TargetSpec& target, const Eigen::VectorXd& u, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& y);

}  // namespace pflow
