#include <benchmark/benchmark.h>

#include "conic_ricci/distance.hpp"
#include "conic_ricci/entropy.hpp"
#include "conic_ricci/flow.hpp"
#include "conic_ricci/metric.hpp"
#include "conic_ricci/soliton.hpp"

using namespace conic_ricci;

namespace {

ConeDivisor three_points() {
  return ConeDivisor::from_weights(
      {{ConePoint::finite(1.0), 0.2}, {ConePoint::finite({0.0, 1.0}), 0.3}, {ConePoint::infinity(), 0.6}});
}

ConicMetric cylinder_metric(int n_phi) {
  return build_reference_metric(three_points(), CutoffSpec{},
                                Discretization::cylinder_log2_aligned(n_phi, -14.0, 14.0));
}

void BM_ReferenceBuild(benchmark::State& state) {
  const Discretization disc = Discretization::cylinder_log2_aligned(static_cast<int>(state.range(0)), -14.0, 14.0);
  for (auto _ : state) benchmark::DoNotOptimize(build_reference_metric(three_points(), CutoffSpec{}, disc));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(disc.size()));
}
BENCHMARK(BM_ReferenceBuild)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_StiffnessApply(benchmark::State& state) {
  const ConicMetric m = cylinder_metric(static_cast<int>(state.range(0)));
  const GridField u = m.reference().log_density();
  for (auto _ : state) benchmark::DoNotOptimize(stiffness_apply(m.disc(), u));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(u.size()));
}
BENCHMARK(BM_StiffnessApply)->Arg(128)->Arg(256);

void BM_CurvatureMass(benchmark::State& state) {
  const ConicMetric m = cylinder_metric(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(curvature_mass(m));
}
BENCHMARK(BM_CurvatureMass)->Arg(128)->Arg(256);

void BM_FlowStep2D(benchmark::State& state) {
  FlowState s;
  s.metric = cylinder_metric(static_cast<int>(state.range(0)));
  FlowConfig cfg;
  cfg.policy = FlowConfig::StepPolicy::Fixed;
  for (auto _ : state) benchmark::DoNotOptimize(flow_step(s, 1e-3, cfg));
}
BENCHMARK(BM_FlowStep2D)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_MinimizeMu1D(benchmark::State& state) {
  const ConicMetric m(smooth_pole_reference(0.2, 0.6, static_cast<int>(state.range(0))),
                      GridField(static_cast<std::size_t>(state.range(0)), 0.0));
  for (auto _ : state) benchmark::DoNotOptimize(minimize_mu(m));
}
BENCHMARK(BM_MinimizeMu1D)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_SolveSoliton(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(solve_soliton(0.6, 0.3));
}
BENCHMARK(BM_SolveSoliton)->Unit(benchmark::kMillisecond);

void BM_DistanceMatrix(benchmark::State& state) {
  const ConicMetric m = cylinder_metric(static_cast<int>(state.range(0)));
  const std::vector<SamplePoint> samples = cone_samples(m);
  for (auto _ : state) benchmark::DoNotOptimize(distance_matrix(m, samples));
}
BENCHMARK(BM_DistanceMatrix)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
