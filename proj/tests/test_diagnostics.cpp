#include <gtest/gtest.h>

#include "pflow/diagnostics.hpp"
#include "pflow/errors.hpp"
#include "pflow/flow.hpp"
#include "pflow/initial_data.hpp"

#include <cmath>
#include <numbers>

using namespace pflow;

namespace {

constexpr double kPi = std::numbers::pi;

template <class F>
FieldMap sample(const GridSpec& g, int d, F f) {
  FieldMap u(g, d);
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    std::array<double, 3> x{};
    for (int a = 0; a < g.dim(); ++a) x[static_cast<std::size_t>(a)] = g.position(c, a);
    f(x, u.at(c));
  }
  return u;
}

FieldHistory stepped_history(const FieldMap& u0, const FlowParams& params, int steps, double dt) {
  FieldHistory h;
  h.params = params;
  h.append(u0);
  advance(h, steps, dt);
  return h;
}

FieldMap constant_sphere(const GridSpec& g) {
  return sample(g, 3, [](const auto&, auto v) { v[0] = 0.0; v[1] = 0.6; v[2] = 0.8; });
}

}  // namespace

TEST(TotalEnergy, ConstantMap) {
  const GridSpec g = GridSpec::cube(2, 8, 1.0);
  const FlowParams params = make_params(2.0, 0.1, 10.0, FlowKind::DeltaKFlow, TargetSpec::sphere(3));
  EXPECT_NEAR(total_energy(constant_sphere(g), params), 0.005, 1e-15);
}

TEST(TotalEnergy, UnitGradientP4) {
  // u = (cos x, sin x) on the unit-volume circle: |D u|^2 = (sin(kh)/h)^2 k^2 ... with k = 2 pi.
  const int n = 64;
  const GridSpec g = GridSpec::cube(1, n, 1.0);
  const double w = 2.0 * kPi;
  const FieldMap u = sample(g, 2, [&](const auto& x, auto v) { v[0] = std::cos(w * x[0]) / w; v[1] = std::sin(w * x[0]) / w; });
  FlowParams params = make_params(4.0, 0.1, 0.0, FlowKind::DeltaKFlow, TargetSpec::flat(2));
  params.delta = 0.0;
  const double h = 1.0 / n;
  const double discrete = std::pow(std::sin(w * h) / (w * h), 4) / 4.0;
  EXPECT_NEAR(total_energy(u, params), discrete, 1e-14);
  EXPECT_NEAR(total_energy(u, params), 0.25, 2e-3);
}

TEST(TotalEnergy, MatchesIndependentQuadrature) {
  const GridSpec g = GridSpec::make(2, {16, 12}, {1.0, 0.9});
  const TargetSpec t = TargetSpec::sphere(3);
  const FieldMap u = random_smooth_map(g, t, {0.0, 0.0, 1.0}, 5, 3, 0.2);
  FieldMap v = u;
  for (std::size_t i = 0; i < v.values.size(); i += 7) v.values[i] *= 1.1;  // leave the sphere a little
  const FlowParams params = make_params(3.0, 0.15, 6.0, FlowKind::DeltaKFlow, t);
  // second implementation: explicit neighbour differences, cells summed in reverse
  double sum = 0.0;
  for (std::size_t c = g.cell_count(); c-- > 0;) {
    double e = params.delta * params.delta;
    for (int a = 0; a < 2; ++a) {
      const std::size_t up = g.neighbor_plus(c, a), dn = g.neighbor_minus(c, a);
      for (int k = 0; k < 3; ++k) {
        const double d = (v.at(up)[static_cast<std::size_t>(k)] - v.at(dn)[static_cast<std::size_t>(k)]) / (2.0 * g.spacing(a));
        e += d * d;
      }
    }
    Eigen::VectorXd y(3);
    for (int k = 0; k < 3; ++k) y(k) = v.at(c)[static_cast<std::size_t>(k)];
    e += 36.0 * params.chi.eval(std::pow(y.norm() - 1.0, 2)).chi;
    sum += std::pow(e, 1.5);
  }
  const double oracle = sum * g.cell_volume() / 3.0;
  EXPECT_NEAR(total_energy(v, params), oracle, 1e-12 * oracle);
}

TEST(Dissipation, ConstantMapIsZero) {
  const GridSpec g = GridSpec::cube(2, 8, 1.0);
  const FlowParams params = make_params(3.0, 0.1, 10.0, FlowKind::DeltaKFlow, TargetSpec::sphere(3));
  const FieldHistory h = stepped_history(constant_sphere(g), params, 2, 1e-4);
  EXPECT_EQ(dissipation_residual(h, h.snapshots[1].time), 0.0);
  EXPECT_THROW((void)dissipation_residual(h, 0.0), RangeError);
  EXPECT_THROW((void)dissipation_residual(h, h.t_end()), RangeError);
}

TEST(Dissipation, HeatModeClosedFormAndDtRefinement) {
  const double len = 2.0 * kPi;
  const GridSpec g = GridSpec::cube(1, 64, len);
  const FlowParams params = make_params(2.0, 0.1, 0.0, FlowKind::DeltaFlowProjected, TargetSpec::flat(1));
  const FieldMap u0 = sample(g, 1, [](const auto& x, auto v) { v[0] = std::sin(x[0]); });
  const double dt = stable_dt(params, g, StepControl{});
  const FieldHistory h1 = stepped_history(u0, params, 2, dt);
  const FieldHistory h2 = stepped_history(u0, params, 2, dt / 2.0);
  const double r1 = dissipation_residual(h1, h1.snapshots[1].time);
  const double r2 = dissipation_residual(h2, h2.snapshots[1].time);
  EXPECT_LE(r1, 0.05);
  EXPECT_NEAR(r1 / r2, 2.0, 0.1);
  // wide-stencil Laplacian symbol is (sin h / h)^2, continuum value pi
  const double hh = len / 64;
  EXPECT_NEAR(dissipation_integral(u0, params), kPi * std::pow(std::sin(hh) / hh, 4), 1e-12);
  EXPECT_NEAR(dissipation_integral(u0, params), kPi, 1e-2 * kPi);
}

TEST(ApplyA, ReducesToLaplacian) {
  const GridSpec g = GridSpec::cube(2, 16, 1.0);
  ScalarField psi{g, std::vector<double>(g.cell_count())};
  for (std::size_t c = 0; c < g.cell_count(); ++c) psi.values[c] = std::sin(2 * kPi * g.position(c, 0)) * std::cos(2 * kPi * g.position(c, 1));
  const FieldMap u = random_smooth_map(g, TargetSpec::flat(2), {0.0, 0.0}, 3, 2, 0.3);
  const GradientField gu = gradient(u);
  const std::vector<double> hp = scalar_hessian(psi);
  auto lap = [&](std::size_t c) { return hp[c * 4 + 0] + hp[c * 4 + 3]; };

  const FlowParams p2 = make_params(2.0, 0.1, 0.0, FlowKind::DeltaKFlow, TargetSpec::flat(2));
  const ScalarField a2 = apply_A(psi, gu, energy_density(u, gu, p2), p2);
  for (std::size_t c = 0; c < g.cell_count(); ++c) EXPECT_EQ(a2.values[c], lap(c));

  const FlowParams p3 = make_params(3.0, 0.1, 0.0, FlowKind::DeltaKFlow, TargetSpec::flat(2));
  const FieldMap zero(g, 2);
  const GradientField gz = gradient(zero);
  const ScalarField a0 = apply_A(psi, gz, energy_density(zero, gz, p3), p3);
  for (std::size_t c = 0; c < g.cell_count(); ++c) EXPECT_EQ(a0.values[c], lap(c));

  const ScalarField one{g, std::vector<double>(g.cell_count(), 3.0)};
  for (double v : apply_A(one, gu, energy_density(u, gu, p3), p3).values) EXPECT_EQ(v, 0.0);
}

TEST(Bochner, ConstantMapIsZero) {
  const GridSpec g = GridSpec::cube(2, 8, 1.0);
  const FlowParams params = make_params(3.0, 0.1, 10.0, FlowKind::DeltaKFlow, TargetSpec::sphere(3));
  const FieldHistory h = stepped_history(constant_sphere(g), params, 2, 1e-4);
  const BochnerResidual r = bochner_residual(h, h.snapshots[1].time);
  EXPECT_EQ(r.linf, 0.0);
  const BochnerMargin m = bochner_inequality_check(h, h.snapshots[1].time, 2.0);
  EXPECT_NEAR(m.min_margin, 2.0 * std::pow(0.1, 5.0), 1e-18);
}

TEST(Bochner, FlatAffineVanishesAwayFromSeam) {
  const GridSpec g = GridSpec::cube(1, 64, 1.0);
  const FlowParams params = make_params(3.0, 0.1, 0.0, FlowKind::DeltaKFlow, TargetSpec::flat(2));
  const FieldMap u0 = sample(g, 2, [](const auto& x, auto v) { v[0] = 0.5 * x[0]; v[1] = -x[0]; });
  const FieldHistory h = stepped_history(u0, params, 2, 1e-6);
  const BochnerResidual r = bochner_residual(h, h.snapshots[1].time);
  for (int i = 12; i < 52; ++i) EXPECT_NEAR(r.field.values[static_cast<std::size_t>(i)], 0.0, 1e-9);
}

TEST(Bochner, ProjectedCurvedHistoryRejected) {
  const GridSpec g = GridSpec::cube(2, 8, 1.0);
  const FlowParams params = make_params(3.0, 0.1, 0.0, FlowKind::DeltaFlowProjected, TargetSpec::sphere(3));
  const FieldHistory h = stepped_history(constant_sphere(g), params, 2, 1e-4);
  EXPECT_THROW((void)bochner_residual(h, h.snapshots[1].time), DomainError);
}

TEST(Bochner, ResidualConvergesOnSphereRun1D) {
  // joint refinement (h, dt) -> (h/2, dt/4)
  const TargetSpec t = TargetSpec::sphere(3);
  const FlowParams params = make_params(3.0, 0.1, 10.0, FlowKind::DeltaKFlow, t);
  std::vector<double> res;
  for (int n : {32, 64, 128}) {
    const GridSpec g = GridSpec::cube(1, n, 1.0);
    const FieldMap u0 = sample(g, 3, [](const auto& x, auto v) {
      const double a = 0.6 * std::sin(2 * kPi * x[0]);
      v[0] = std::sin(a);
      v[1] = 0.0;
      v[2] = std::cos(a);
    });
    const double dt = 0.1 / (static_cast<double>(n) * n);
    const FieldHistory h = stepped_history(u0, params, 2, dt);
    res.push_back(bochner_residual(h, h.snapshots[1].time).linf);
  }
  EXPECT_GE(std::log2(res[0] / res[1]), 1.0);
  EXPECT_GE(std::log2(res[1] / res[2]), 1.0);
}

TEST(BochnerInequality, FlatTargetLhsBoundedByResidual) {
  const GridSpec g = GridSpec::cube(2, 32, 1.0);
  const FlowParams params = make_params(3.0, 0.1, 0.0, FlowKind::DeltaKFlow, TargetSpec::flat(2));
  const FieldMap u0 = random_smooth_map(g, TargetSpec::flat(2), {0.0, 0.0}, 9, 2, 0.05);
  const FieldHistory h = stepped_history(u0, params, 2, 1e-6);
  const double t = h.snapshots[1].time;
  const double tol = bochner_residual(h, t).linf;
  EXPECT_GE(bochner_inequality_check(h, t, 0.0).min_margin, -tol);
}

TEST(MaxPrinciple, ConstantHeatModeAndWrongTarget) {
  const GridSpec g = GridSpec::cube(1, 64, 1.0);
  const FlowParams params = make_params(2.0, 0.1, 0.0, FlowKind::DeltaFlowProjected, TargetSpec::flat(1));
  StepControl control;
  control.t_end = 0.02;
  control.snapshot_dt = 0.002;
  const FieldMap c = sample(g, 1, [](const auto&, auto v) { v[0] = 0.4; });
  EXPECT_EQ(max_principle_check(run(c, params, control)), 0.0);
  const FieldMap mode = sample(g, 1, [](const auto& x, auto v) { v[0] = 0.1 * std::sin(2 * kPi * x[0]); });
  const FieldHistory h = run(mode, params, control);
  EXPECT_EQ(max_principle_check(h), 0.0);
  const GradientField g0 = gradient(h.snapshots.front()), g1 = gradient(h.snapshots.back());
  double s0 = 0.0, s1 = 0.0;
  for (double v : g0.data) s0 = std::max(s0, std::abs(v));
  for (double v : g1.data) s1 = std::max(s1, std::abs(v));
  // discrete heat symbol (sin(wh)/h)^2 per unit time, up to O(dt)
  const double w = 2 * kPi, hh = 1.0 / 64;
  EXPECT_NEAR(s1 / s0, std::exp(-control.t_end * std::pow(std::sin(w * hh) / hh, 2)), 1e-3);

  const FlowParams sp = make_params(2.0, 0.1, 10.0, FlowKind::DeltaKFlow, TargetSpec::sphere(3));
  const FieldHistory hs = stepped_history(constant_sphere(GridSpec::cube(1, 8, 1.0)), sp, 1, 1e-4);
  EXPECT_THROW((void)max_principle_check(hs), DomainError);
}

TEST(MaxPrinciple, RandomSmoothP3) {
  const GridSpec g = GridSpec::cube(2, 32, 1.0);
  const FlowParams params = make_params(3.0, 0.1, 0.0, FlowKind::DeltaFlowProjected, TargetSpec::flat(2));
  StepControl control;
  control.t_end = 0.01;
  control.snapshot_dt = 0.0;
  const FieldMap u0 = random_smooth_map(g, TargetSpec::flat(2), {0.0, 0.0}, 4, 3, 0.05);
  EXPECT_LE(max_principle_check(run(u0, params, control)), 1e-3);
}

TEST(WeightedHessian, ConstantIsZeroAndEmptyWindowThrows) {
  const GridSpec g = GridSpec::cube(2, 16, 1.0);
  const FlowParams params = make_params(3.0, 0.1, 10.0, FlowKind::DeltaKFlow, TargetSpec::sphere(3));
  const FieldHistory h = stepped_history(constant_sphere(g), params, 4, 1e-3);
  const ParabolicWindow w{h.t_end(), {0.5, 0.5}, 0.05};
  const WeightedHessianResult r = weighted_hessian_integral(h, w);
  EXPECT_EQ(r.integral, 0.0);
  EXPECT_EQ(r.ratio, 0.0);
  EXPECT_GT(r.reference, 0.0);
  EXPECT_THROW((void)weighted_hessian_integral(h, ParabolicWindow{h.t_end(), {0.5, 0.5}, 0.01}), DomainError);
  EXPECT_THROW((void)weighted_hessian_integral(h, ParabolicWindow{h.t_end(), {0.5, 0.5}, 0.0}), DomainError);
  EXPECT_EQ(local_energy_ratio(h, w).ratio, 0.0);
}

TEST(WeightedHessian, GenericRunPositive) {
  const GridSpec g = GridSpec::cube(2, 16, 1.0);
  const TargetSpec t = TargetSpec::sphere(3);
  const FlowParams params = make_params(3.0, 0.1, 10.0, FlowKind::DeltaKFlow, t);
  const FieldHistory h = stepped_history(random_smooth_map(g, t, {0.0, 0.0, 1.0}, 2, 2, 0.2), params, 6, 2e-4);
  const ParabolicWindow w{h.t_end(), {0.5, 0.5}, 0.035};
  const WeightedHessianResult r = weighted_hessian_integral(h, w);
  EXPECT_GT(r.integral, 0.0);
  EXPECT_GT(r.ratio, 0.0);
  EXPECT_GT(local_energy_ratio(h, w).ratio, 0.0);
}

TEST(Series, OneRecordPerSnapshotWithNanAtBoundary) {
  const GridSpec g = GridSpec::cube(1, 16, 1.0);
  const TargetSpec t = TargetSpec::sphere(3);
  const FlowParams params = make_params(3.0, 0.1, 10.0, FlowKind::DeltaKFlow, t);
  const FieldHistory h = stepped_history(random_smooth_map(g, t, {0.0, 0.0, 1.0}, 1, 2, 0.2), params, 3, 1e-4);
  const auto rec = diagnostics_series(h);
  ASSERT_EQ(rec.size(), 4u);
  EXPECT_TRUE(std::isnan(rec.front().bochner_linf));
  EXPECT_TRUE(std::isnan(rec.back().bochner_l2));
  EXPECT_FALSE(std::isnan(rec[1].bochner_linf));
  for (const auto& r : rec) {
    EXPECT_GE(r.total_energy, std::pow(0.1, 3.0) / 3.0);
    EXPECT_GE(r.dissipation, 0.0);
  }
}
