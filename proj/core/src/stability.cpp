#include "conic_ricci/stability.hpp"

#include "conic_ricci/error.hpp"

namespace conic_ricci {

std::string to_string(StabilityClass c) {
  switch (c) {
    case StabilityClass::Stable: return "Stable";
    case StabilityClass::SemiStable: return "SemiStable";
    case StabilityClass::Unstable: return "Unstable";
  }
  return "";
}

std::string to_string(PredictedLimit p) {
  switch (p) {
    case PredictedLimit::ConstantCurvatureOnBeta: return "ConstantCurvatureOnBeta";
    case PredictedLimit::ConstantCurvatureOnBetaInfinity: return "ConstantCurvatureOnBetaInfinity";
    case PredictedLimit::SolitonGInfinity: return "SolitonGInfinity";
  }
  return "";
}

StabilityReport classify_divisor(const ConeDivisor& divisor) {
  if (divisor.empty()) throw DomainError("divisor has no cone points");
  if (!(divisor.gamma() > 0.0)) throw DomainError("gamma must be positive");
  StabilityReport out;
  // entries are sorted by ascending weight, so the largest is last
  out.beta_k = divisor.entries().back().weight;
  out.beta_k_prime = ExactWeight::from_units(divisor.total_units() - out.beta_k.units());
  if (out.beta_k_prime > out.beta_k) {
    out.stability = StabilityClass::Stable;
    out.prediction = PredictedLimit::ConstantCurvatureOnBeta;
  } else if (out.beta_k_prime == out.beta_k) {
    out.stability = StabilityClass::SemiStable;
    out.prediction = PredictedLimit::ConstantCurvatureOnBetaInfinity;
  } else {
    out.stability = StabilityClass::Unstable;
    out.prediction = PredictedLimit::SolitonGInfinity;
  }
  if (out.stability == StabilityClass::Stable) {
    out.limit = divisor;
    return out;
  }
  std::vector<ConeEntry> limit{{ConePoint::infinity(), out.beta_k}};
  if (out.beta_k_prime.units() > 0) limit.push_back({ConePoint::finite({0.0, 0.0}), out.beta_k_prime});
  out.limit = ConeDivisor::make(std::move(limit));
  return out;
}

}  // namespace conic_ricci
