#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "conic_ricci/error.hpp"
#include "conic_ricci/metric.hpp"

using namespace conic_ricci;

namespace {

ConeDivisor three_point() {
  return ConeDivisor::from_weights({{ConePoint::finite({1, 0}), 0.2},
                                    {ConePoint::finite({0, 1}), 0.3},
                                    {ConePoint::infinity(), 0.6}});
}

ConeDivisor pole_pair(double south, double north) {
  return ConeDivisor::from_weights({{ConePoint::finite({0, 0}), south}, {ConePoint::infinity(), north}});
}

// Reference measure of the two-pole cutoff density at scale 1, by adaptive quadrature
// in the radius.
double cutoff_area_oracle(double beta0, double beta_inf, double radius) {
  auto chi = [radius](double r) {
    const double x = (r - radius) / radius;
    if (x <= 0) return 1.0;
    if (x >= 1) return 0.0;
    // 1 - integral_0^x 630 t^4 (1-t)^4 dt, expanded by hand
    const double s = 126 * std::pow(x, 5) - 420 * std::pow(x, 6) + 540 * std::pow(x, 7) - 315 * std::pow(x, 8) +
                     70 * std::pow(x, 9);
    return 1.0 - s;
  };
  auto f = [&](double r) {
    const double c = chi(r);
    return 2 * std::numbers::pi * r * (c * std::pow(r, -2 * beta0) + (1 - c) * std::pow(1 + r * r, beta_inf - 2));
  };
  boost::math::quadrature::tanh_sinh<double> ts;
  boost::math::quadrature::exp_sinh<double> es;
  return ts.integrate(f, 0.0, radius) + ts.integrate(f, radius, 2 * radius) + es.integrate(f, 2 * radius, INFINITY);
}

}  // namespace

TEST(ReferenceMetric, RoundSphereHasUnitCurvature) {
  const auto disc = default_symmetric_grid(4096, 2.0, 2.0);
  const auto g = build_reference_metric(ConeDivisor{}, {}, disc);
  const auto r = scalar_curvature(g);
  for (double v : r) EXPECT_NEAR(v, 1.0, 1e-10);
  const auto gb = area_and_gauss_bonnet(g);
  EXPECT_NEAR(gb.area, 2.0, 1e-8);
  EXPECT_NEAR(gb.curvature_integral, 2.0, 1e-8);
  EXPECT_NEAR(gb.defect, 0.0, 1e-8);
}

TEST(ReferenceMetric, RoundDensityMatchesFubiniStudy) {
  const auto disc = default_symmetric_grid(1024, 2.0, 2.0);
  const auto g = build_reference_metric(ConeDivisor{}, {}, disc);
  for (int i = 0; i < disc.n_s(); ++i) {
    const double r2 = std::exp(2 * disc.s(i));
    const double expected = (2.0 / std::numbers::pi) * r2 / ((1 + r2) * (1 + r2));
    EXPECT_NEAR(std::exp(g.reference().log_density()[i]) / expected, 1.0, 1e-10);
  }
}

TEST(ReferenceMetric, FootballHasConstantCurvature) {
  const auto disc = default_symmetric_grid(1024, 1.0, 1.0);
  const ConicMetric g(ReferenceSampling::build(ReferenceDensity::football(0.5), disc), GridField(disc.size(), 0.0));
  for (double v : scalar_curvature(g)) EXPECT_NEAR(v, 0.5, 1e-6);
  const auto gb = area_and_gauss_bonnet(g);
  EXPECT_NEAR(gb.curvature_integral, 1.0, 1e-4);
  EXPECT_NEAR(gb.area, 2.0, 1e-12);
}

TEST(ReferenceMetric, TwoPoleCutoffScaleMatchesQuadratureOracle) {
  const double oracle = 2.0 / cutoff_area_oracle(0.5, 0.5, 2.0);
  const auto disc = Discretization::symmetric(4096, -40, 40);
  const auto g = build_reference_metric(pole_pair(0.5, 0.5), {}, disc);
  EXPECT_NEAR(g.reference().density().scale() / oracle, 1.0, 1e-8);
  EXPECT_NEAR(g.area(), 2.0, 1e-12);
}

TEST(ReferenceMetric, NormalizationIsIdempotent) {
  const auto disc = Discretization::symmetric(2048, -40, 40);
  const auto g = build_reference_metric(pole_pair(0.2, 0.6), {}, disc);
  const auto again = ReferenceSampling::build(g.reference().density(), disc);
  EXPECT_NEAR(again->density().scale() / g.reference().density().scale(), 1.0, 1e-12);
}

TEST(ReferenceMetric, CutoffIsFlatInsideBall) {
  const auto disc = Discretization::cylinder_log2_aligned(128, -8, 3);
  const auto g = build_reference_metric(three_point(), {}, disc);
  const auto r = scalar_curvature(g);
  std::size_t checked = 0;
  for (std::size_t k = 0; k < disc.size(); ++k) {
    if (g.reference().is_cone(k)) {
      EXPECT_TRUE(std::isnan(r[k]));
      continue;
    }
    if (disc.s(disc.row(k)) < std::log(2.0)) {
      EXPECT_NEAR(r[k], 0.0, 1e-6);
      ++checked;
    }
  }
  EXPECT_GT(checked, 1000u);
  EXPECT_EQ(g.reference().cone_nodes().size(), 2u);
}

TEST(ReferenceMetric, CutoffDensityHasTheClosedForms) {
  const auto disc = Discretization::cylinder_log2_aligned(128, -8, 3);
  const auto g = build_reference_metric(three_point(), {}, disc);
  const double c = g.reference().density().scale();
  for (std::size_t k = 0; k < disc.size(); k += 37) {
    if (g.reference().is_cone(k)) continue;
    const auto z = disc.z(disc.row(k), disc.column(k));
    const double r = std::abs(z);
    double expected;
    if (r <= 2.0)
      expected = c * std::pow(std::abs(z - 1.0), -0.4) * std::pow(std::abs(z - std::complex<double>(0, 1)), -0.6);
    else if (r >= 4.0)
      expected = c * std::pow(1 + r * r, 0.6 - 2);
    else
      continue;
    EXPECT_NEAR(std::exp(g.reference().log_density()[k]) / (expected * r * r), 1.0, 1e-12);
  }
}

TEST(ReferenceMetric, GaussBonnetConvergesOnCylinder) {
  double previous = 0.0;
  for (int n : {128, 256}) {
    const auto disc = Discretization::cylinder_log2_aligned(n, -8, 3);
    const auto g = build_reference_metric(three_point(), {}, disc);
    const auto gb = area_and_gauss_bonnet(g);
    EXPECT_NEAR(gb.area, 2.0, 1e-12);
    EXPECT_LT(std::abs(gb.defect), 1e-3) << n;
    if (n == 256 && std::abs(gb.defect) > 1e-12) EXPECT_LT(std::abs(gb.defect), 0.5 * std::abs(previous));
    previous = gb.defect;
  }
}

TEST(ReferenceMetric, ScaleConstantStaysBoundedAlongTheFamily) {
  const auto disc = Discretization::cylinder_log2_aligned(128, -10, 3);
  double lo = INFINITY, hi = 0;
  for (double t : {1.0, 0.5, 0.25, 0.125}) {
    const auto g = build_reference_metric(three_point().scaled(t), {}, disc);
    lo = std::min(lo, g.reference().density().scale());
    hi = std::max(hi, g.reference().density().scale());
  }
  EXPECT_GT(lo, 0.01);
  EXPECT_LT(hi / lo, 10.0);
}

TEST(ReferenceMetric, RejectsInvalidInputs) {
  const auto disc = Discretization::cylinder_log2_aligned(128, -8, 3);
  auto on_annulus = ConeDivisor::from_weights({{ConePoint::finite({3, 0}), 0.2}, {ConePoint::infinity(), 0.6}});
  EXPECT_THROW(build_reference_metric(on_annulus, {}, disc), DomainError);
  auto off_node = ConeDivisor::from_weights({{ConePoint::finite({1.01, 0}), 0.2}, {ConePoint::infinity(), 0.6}});
  EXPECT_THROW(build_reference_metric(off_node, {}, disc), GridError);
  const auto line = Discretization::symmetric(128, -10, 10);
  EXPECT_THROW(build_reference_metric(three_point(), {}, line), GridError);
}

TEST(ReferenceMetric, AllFiniteDivisorIsMovedToInfinity) {
  const auto disc = Discretization::symmetric(1024, -30, 30);
  // largest weight at 0 -> infinity, smaller at infinity -> 0
  auto d = ConeDivisor::from_weights({{ConePoint::finite({0, 0}), 0.6}, {ConePoint::infinity(), 0.2}});
  const auto g = build_reference_metric(d, {}, disc);
  EXPECT_DOUBLE_EQ(g.reference().density().weight_high(), 0.6);
  EXPECT_DOUBLE_EQ(g.reference().density().weight_low(), 0.2);
}

TEST(Curvature, ConstantShiftScalesCurvature) {
  const auto disc = Discretization::cylinder_log2_aligned(128, -8, 3);
  const auto g = build_reference_metric(three_point(), {}, disc);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n01;
  GridField u(disc.size());
  const double a = n01(rng), b = n01(rng);
  for (std::size_t k = 0; k < u.size(); ++k) {
    const auto z = disc.z(disc.row(k), disc.column(k));
    u[k] = 0.3 * std::sin(a * z.real()) / (1 + std::norm(z)) + 0.2 * b * z.imag() / (1 + std::norm(z));
  }
  const auto r1 = scalar_curvature(g.with_potential(u));
  GridField v = u;
  for (double& x : v) x += 0.7;
  const auto r2 = scalar_curvature(g.with_potential(v));
  const auto measure = g.with_potential(u).measure();
  // rounding of the stiffness differences, relative to the node measure
  const double stencil = 2 * (disc.radial_edge_weight() + disc.angular_edge_weight()) * 1.7;
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (g.reference().is_cone(k)) continue;
    const double tol = 1e-14 * (std::abs(r1[k]) + stencil / measure[k]);
    EXPECT_NEAR(r2[k], std::exp(-0.7) * r1[k], tol);
  }
}

TEST(Curvature, RandomPotentialsKeepTheCurvatureIntegral) {
  const auto disc = default_symmetric_grid(2048, 2.0, 2.0);
  const auto g = build_reference_metric(ConeDivisor{}, {}, disc);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coef(-0.5, 0.5);
  for (int trial = 0; trial < 5; ++trial) {
    const double a = coef(rng), b = coef(rng), c = coef(rng);
    GridField u(disc.size());
    for (int i = 0; i < disc.n_s(); ++i) {
      const double x = std::tanh(disc.s(i));
      u[i] = a * x + b * (1.5 * x * x - 0.5) + c * x * x * x;
    }
    const auto gb = area_and_gauss_bonnet(g.with_potential(u));
    EXPECT_NEAR(gb.defect, 0.0, 1e-8);
  }
}

TEST(Curvature, RejectsNonFinitePotential) {
  const auto disc = Discretization::symmetric(64, -10, 10);
  const auto g = build_reference_metric(ConeDivisor{}, {}, disc);
  GridField u(disc.size(), 0.0);
  u[5] = NAN;
  EXPECT_THROW(g.with_potential(u), DomainError);
}
