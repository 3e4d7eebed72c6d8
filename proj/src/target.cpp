#include "pflow/target.hpp"

#include "pflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pflow {

namespace {

constexpr double kCutLocusRadius = 1e-14;
constexpr double kOnManifoldTol = 1e-8;

double norm(std::span<const double> y) {
  double s = 0.0;
  for (double v : y) s += v * v;
  return std::sqrt(s);
}

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

ChiProfile::ChiProfile(double r0) : r0_(r0), lo_(r0 * r0), hi_(4.0 * r0 * r0) {
  if (!(r0 > 0.0)) throw DomainError("ChiProfile: r0 must be positive, got " + std::to_string(r0));
}

ChiProfile::Value ChiProfile::eval(double t) const {
  if (t < 0.0) throw DomainError("chi_eval: t must be >= 0, got " + std::to_string(t));
  if (t <= lo_) return {t, 1.0, 0.0};
  if (t >= hi_) return {hi_, 0.0, 0.0};
  // P(s) = s + 4 s^3 - 7 s^4 + 3 s^5 on s in [0, 1]; P' = (1-s)^2 (15 s^2 + 2 s + 1) >= 0.
  const double w = hi_ - lo_;
  const double s = (t - lo_) / w;
  const double s2 = s * s;
  const double p = s + s2 * s * (4.0 + s * (-7.0 + 3.0 * s));
  const double dp = 1.0 + s2 * (12.0 + s * (-28.0 + 15.0 * s));
  const double ddp = s * (24.0 + s * (-84.0 + 60.0 * s));
  return {lo_ + w * p, dp, ddp / w};
}

TargetSpec TargetSpec::flat(int d) {
  if (d < 1) throw DomainError("TargetSpec::flat: ambient dimension must be >= 1");
  return {TargetKind::Flat, d, 1.0};
}

TargetSpec TargetSpec::sphere(int d, double r0) {
  if (d < 2) throw DomainError("TargetSpec::sphere: ambient dimension must be >= 2");
  if (!(r0 > 0.0 && r0 < 1.0)) {
    throw DomainError("TargetSpec::sphere: tubular radius must lie in (0, 1), got " + std::to_string(r0));
  }
  return {TargetKind::Sphere, d, r0};
}

void TargetSpec::project_into(std::span<const double> y, std::span<double> out) const {
  if (kind_ == TargetKind::Flat) {
    std::copy(y.begin(), y.end(), out.begin());
    return;
  }
  const double r = norm(y);
  if (r <= kCutLocusRadius) throw CutLocusError("project: point at the centre of the sphere");
  for (std::size_t k = 0; k < y.size(); ++k) out[k] = y[k] / r;
}

Eigen::VectorXd TargetSpec::project(const Eigen::VectorXd& y) const {
  Eigen::VectorXd out(y.size());
  project_into(as_span(y), {out.data(), static_cast<std::size_t>(out.size())});
  return out;
}

double TargetSpec::dist_sq(std::span<const double> y) const {
  if (kind_ == TargetKind::Flat) return 0.0;
  const double r = norm(y) - 1.0;
  return r * r;
}

double TargetSpec::dist_sq(const Eigen::VectorXd& y) const { return dist_sq(as_span(y)); }

double TargetSpec::penalty_and_grad_into(const ChiProfile& chi, std::span<const double> y, double big_k,
                                         std::span<double> grad) const {
  std::fill(grad.begin(), grad.end(), 0.0);
  if (kind_ == TargetKind::Flat) return 0.0;
  const double r = norm(y);
  const double g = (r - 1.0) * (r - 1.0);
  const auto c = chi.eval(g);
  const double k2 = big_k * big_k;
  if (c.d1 != 0.0) {
    if (r <= kCutLocusRadius) throw CutLocusError("penalty_and_grad: point at the centre of the sphere");
    // grad dist^2 = 2 (y - y/|y|)
    const double scale = k2 * c.d1 * 2.0 * (1.0 - 1.0 / r);
    for (std::size_t k = 0; k < y.size(); ++k) grad[k] = scale * y[k];
  }
  return k2 * c.chi;
}

void TargetSpec::hess_f_into(const ChiProfile& chi, std::span<const double> y, std::span<double> out) const {
  const auto d = static_cast<std::size_t>(d_);
  std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(d * d), 0.0);
  if (kind_ == TargetKind::Flat) return;
  const double r = norm(y);
  const double g = (r - 1.0) * (r - 1.0);
  const auto c = chi.eval(g);
  if (c.d1 == 0.0 && c.d2 == 0.0) return;
  if (r <= kCutLocusRadius) throw CutLocusError("hess_F: point at the centre of the sphere");
  // dist^2 = (r-1)^2:  grad = 2 (r-1) yhat,  hess = 2 yhat yhat^T + 2 (1 - 1/r) (I - yhat yhat^T)
  const double tangential = 2.0 * (1.0 - 1.0 / r);
  const double radial_grad = 2.0 * (r - 1.0);
  for (std::size_t i = 0; i < d; ++i) {
    const double yi = y[i] / r;
    for (std::size_t j = 0; j < d; ++j) {
      const double yj = y[j] / r;
      const double proj = yi * yj;
      const double hg = 2.0 * proj + tangential * ((i == j ? 1.0 : 0.0) - proj);
      out[i * d + j] = c.d2 * radial_grad * radial_grad * proj + c.d1 * hg;
    }
  }
}

Eigen::VectorXd project(const TargetSpec& target, const Eigen::VectorXd& y) { return target.project(y); }

double dist_sq(const TargetSpec& target, const Eigen::VectorXd& y) { return target.dist_sq(y); }

ChiProfile::Value chi_eval(const ChiProfile& profile, double t) { return profile.eval(t); }

PenaltyValue penalty_and_grad(const TargetSpec& target, const ChiProfile& profile, const Eigen::VectorXd& y,
                              double big_k) {
  if (big_k < 0.0) throw DomainError("penalty_and_grad: K must be >= 0");
  PenaltyValue out{0.0, Eigen::VectorXd::Zero(y.size())};
  out.value = target.penalty_and_grad_into(profile, as_span(y), big_k,
                                           {out.grad.data(), static_cast<std::size_t>(out.grad.size())});
  return out;
}

Eigen::MatrixXd hess_F(const TargetSpec& target, const ChiProfile& profile, const Eigen::VectorXd& y) {
  const auto d = y.size();
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> h(d, d);
  target.hess_f_into(profile, as_span(y), {h.data(), static_cast<std::size_t>(d * d)});
  return h;
}

double hessF_bound_ratio(const TargetSpec& target, const ChiProfile& profile,
                         const std::vector<Eigen::VectorXd>& samples) {
  if (samples.empty()) throw DomainError("hessF_bound_ratio: empty sample list");
  const double r0sq = profile.r0() * profile.r0();
  double worst = 0.0;
  for (const auto& y : samples) {
    const double g = target.dist_sq(y);
    if (target.is_flat()) continue;
    if (!(g > 0.0 && g < r0sq)) {
      throw DomainError("hessF_bound_ratio: sample outside the open tubular shell, dist^2=" + std::to_string(g));
    }
    const Eigen::MatrixXd h = hess_F(target, profile, y);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
    const double lambda_min = eig.eigenvalues().minCoeff();
    const double f = profile.eval(g).chi;
    worst = std::max(worst, std::max(0.0, -lambda_min) / std::sqrt(f));
  }
  return worst;
}

Eigen::VectorXd second_fundamental_contraction(const TargetSpec& target, const Eigen::VectorXd& u,
                                               const Eigen::MatrixXd& grad_u) {
  if (target.is_flat()) return Eigen::VectorXd::Zero(u.size());
  const double drift = std::abs(u.norm() - 1.0);
  if (drift > kOnManifoldTol) {
    throw OffManifoldError("second_fundamental_contraction: | |u| - 1 | = " + std::to_string(drift));
  }
  return -grad_u.squaredNorm() * u;
}

double curvature_quartic(const TargetSpec& target, const Eigen::VectorXd& u, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& y) {
  if (target.is_flat()) return 0.0;
  if (std::abs(x.dot(u)) > kOnManifoldTol || std::abs(y.dot(u)) > kOnManifoldTol) {
    throw OffTangentError("curvature_quartic: arguments must be tangent to the sphere at u");
  }
  const double xy = x.dot(y);
  return x.squaredNorm() * y.squaredNorm() - xy * xy;
}

}  // namespace pflow
