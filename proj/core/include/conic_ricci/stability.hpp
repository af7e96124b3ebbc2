#pragma once

#include <string>

#include "conic_ricci/divisor.hpp"

namespace conic_ricci {

enum class StabilityClass { Stable, SemiStable, Unstable };
enum class PredictedLimit { ConstantCurvatureOnBeta, ConstantCurvatureOnBetaInfinity, SolitonGInfinity };

std::string to_string(StabilityClass c);
std::string to_string(PredictedLimit p);

struct StabilityReport {
  StabilityClass stability = StabilityClass::Stable;
  /// Largest weight and the sum of the others, exact.
  ExactWeight beta_k;
  ExactWeight beta_k_prime;
  /// Divisor of the predicted limit: beta_k at infinity (p_inf) and beta_k' at the origin
  /// (q_inf) when semi-stable or unstable; the divisor itself when stable.
  ConeDivisor limit;
  PredictedLimit prediction = PredictedLimit::ConstantCurvatureOnBeta;
};

/// Compares the largest weight with the sum of the others in exact decimal arithmetic.
/// Fewer than two points count as unstable when one weight is present (beta_k' = 0).
StabilityReport classify_divisor(const ConeDivisor& divisor);

}  // namespace conic_ricci
