#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "conic_ricci/error.hpp"
#include "conic_ricci/soliton.hpp"

using namespace conic_ricci;

namespace {

constexpr double kPi = std::numbers::pi;

// Cubic Hermite interpolation of r on the profile grid.
double r_at(const SolitonProfile& p, double s) {
  const auto it = std::upper_bound(p.s.begin(), p.s.end(), s);
  std::size_t i = std::clamp<std::size_t>(static_cast<std::size_t>(it - p.s.begin()), 1, p.s.size() - 1) - 1;
  const double h = p.s[i + 1] - p.s[i], t = (s - p.s[i]) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * p.r[i] + (t3 - 2 * t2 + t) * h * p.dr[i] + (-2 * t3 + 3 * t2) * p.r[i + 1] +
         (t3 - t2) * h * p.dr[i + 1];
}

double theta_spread(const SolitonProfile& p) {
  const auto [lo, hi] = std::minmax_element(p.theta.begin(), p.theta.end());
  return *hi - *lo;
}

Discretization grid_for(double bn, double bs, int n = 4096) {
  const double a = std::max(1.0 / (1.0 - bn), 1.0 / (1.0 - bs)) * std::log(1e10) / 2.0;
  return Discretization::symmetric(n, -a, a);
}

}  // namespace

TEST(Soliton, RoundSphere) {
  const SolitonProfile p = solve_soliton(0.0, 0.0);
  const double rho = 1.0 / std::sqrt(2.0 * kPi);  // K = 2 pi gamma
  EXPECT_NEAR(p.kappa, 0.0, 1e-12);
  EXPECT_LT(theta_spread(p), 1e-10);
  EXPECT_NEAR(p.length, kPi * rho, 1e-8);
  for (std::size_t i = 0; i < p.s.size(); i += 97) EXPECT_NEAR(p.r[i], rho * std::sin(p.s[i] / rho), 1e-8);
  EXPECT_NEAR(p.area, 2.0, 1e-8);
  EXPECT_NEAR(p.theta_mass, 2.0, 1e-8);
}

TEST(Soliton, SymmetricWeightsGiveFootball) {
  const double beta = 0.5;
  const SolitonProfile p = solve_soliton(beta, beta);
  const double rho = 1.0 / std::sqrt(2.0 * kPi * (1.0 - beta));
  EXPECT_LT(theta_spread(p), 1e-8);
  for (std::size_t i = 0; i < p.s.size(); i += 97)
    EXPECT_NEAR(p.r[i], (1.0 - beta) * rho * std::sin(p.s[i] / rho), 1e-8);

  const Discretization disc = grid_for(beta, beta);
  const ConicMetric football = football_metric(beta, disc);
  const ConformalSoliton c = to_conformal(p, football.reference_ptr());
  double worst = 0.0;
  for (std::size_t k = 0; k < disc.size(); ++k) worst = std::max(worst, std::abs(c.metric.potential()[k]));
  EXPECT_LT(worst, 1e-8);
}

TEST(Soliton, RoundConformalPotentialIsConstant) {
  const SolitonProfile p = solve_soliton(0.0, 0.0);
  const ConformalSoliton c = to_conformal(p, grid_for(0.0, 0.0));
  const auto [lo, hi] = std::minmax_element(c.metric.potential().begin(), c.metric.potential().end());
  EXPECT_LT(*hi - *lo, 1e-8);
}

TEST(Soliton, NontrivialProfileSatisfiesBothEquations) {
  const double tol = 1e-10;
  const SolitonProfile p = solve_soliton(0.6, 0.3, tol);
  EXPECT_LT(p.matching_defect, tol);
  EXPECT_LT(p.curvature_residual, 10 * tol);
  EXPECT_LT(p.hessian_residual, 10 * tol);
  EXPECT_NEAR(p.area, 2.0, 1e-8);
  EXPECT_NEAR(p.theta_mass, 2.0, 1e-8);
  EXPECT_NEAR(p.r.front(), 0.0, 1e-12);
  EXPECT_NEAR(p.r.back(), 0.0, 1e-8);
  EXPECT_NEAR(p.dr.front(), 1.0 - 0.6, 1e-8);
  EXPECT_NEAR(p.dr.back(), -(1.0 - 0.3), 1e-8);
  EXPECT_GT(std::abs(p.kappa), 1.0);
  EXPECT_GT(theta_spread(p), 0.1);
}

TEST(Soliton, ConformalResidual) {
  const SolitonProfile p = solve_soliton(0.6, 0.3);
  const ConformalSoliton c = to_conformal(p, grid_for(0.6, 0.3));
  EXPECT_LT(soliton_residual(c.metric, c.theta), 1e-6);
  EXPECT_LT(std::abs(c.north_slope_error), 1e-8);
  EXPECT_NEAR(c.metric.area(), 2.0, 1e-3);
}

TEST(Soliton, ConformalViewFromEitherPole) {
  const SolitonProfile a = solve_soliton(0.6, 0.3);
  const SolitonProfile b = solve_soliton(0.3, 0.6);
  const Discretization disc = grid_for(0.6, 0.3);
  const ConformalSoliton ca = to_conformal(a, disc), cb = to_conformal(b, disc);
  for (std::size_t k = 0; k < disc.size(); k += 31) EXPECT_NEAR(ca.metric.potential()[k], cb.metric.potential()[k], 1e-8);
}

TEST(Soliton, SwapReflectsProfile) {
  const SolitonProfile a = solve_soliton(0.6, 0.3);
  const SolitonProfile b = solve_soliton(0.3, 0.6);
  EXPECT_NEAR(a.kappa, -b.kappa, 1e-8);
  EXPECT_NEAR(a.length, b.length, 1e-9);
  for (std::size_t i = 0; i < a.s.size(); i += 53) EXPECT_NEAR(a.r[i], r_at(b, a.length - a.s[i]), 1e-8);
  // theta(s) and theta(L - s) differ by a constant
  const double offset = a.theta.front() - b.theta.back();
  EXPECT_NEAR(a.theta.back() - b.theta.front(), offset, 1e-7);
}

TEST(Soliton, Deterministic) {
  const SolitonProfile a = solve_soliton(0.8, 0.3);
  const SolitonProfile b = solve_soliton(0.8, 0.3);
  ASSERT_EQ(a.kappa_iterates.size(), b.kappa_iterates.size());
  for (std::size_t i = 0; i < a.kappa_iterates.size(); ++i) EXPECT_EQ(a.kappa_iterates[i], b.kappa_iterates[i]);
  EXPECT_EQ(a.kappa, b.kappa);
}

TEST(Soliton, RejectsInvalidWeights) {
  EXPECT_THROW(solve_soliton(1.0, 0.2), DomainError);
  EXPECT_THROW(solve_soliton(-0.1, 0.2), DomainError);
  EXPECT_THROW(football_metric(1.2, grid_for(0.0, 0.0, 256)), DomainError);
}

TEST(Football, ConstantCurvatureAndGaussBonnet) {
  for (double beta : {0.2, 0.5, 0.7}) {
    const Discretization disc = grid_for(beta, beta, 2048);
    const ConicMetric m = football_metric(beta, disc);
    const GridField r = scalar_curvature(m);
    for (std::size_t k = 0; k < r.size(); ++k) ASSERT_NEAR(r[k], 1.0 - beta, 1e-6) << beta << " " << k;
    const GaussBonnet gb = area_and_gauss_bonnet(m);
    EXPECT_NEAR(gb.area, 2.0, 1e-10);
    EXPECT_NEAR(gb.defect, 0.0, 1e-6);
  }
}

TEST(Football, SmallWeightApproachesRound) {
  const Discretization disc = grid_for(0.0, 0.0, 1024);
  const ConicMetric a = football_metric(1e-12, disc), b = football_metric(0.0, disc);
  const GridField ma = a.measure(), mb = b.measure();
  for (std::size_t k = 0; k < ma.size(); ++k) EXPECT_NEAR(ma[k], mb[k], 1e-10);
}
