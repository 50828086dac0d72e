#include <benchmark/benchmark.h>

#include "xcflab/chart_calculus.hpp"
#include "xcflab/flow_engine.hpp"
#include "xcflab/linearization.hpp"

using namespace xcflab;

static void CurvatureBundleEval(benchmark::State& state) {
  const StructureConstants C = StructureConstants::hyperbolic_model();
  Mat3 gm = Mat3::Identity();
  gm(0, 0) = 1.05;
  gm(0, 1) = gm(1, 0) = 0.02;
  const FrameMetric g(gm);
  for (auto _ : state) {
    CurvatureBundle b = li_bundle(C, g);
    benchmark::DoNotOptimize(b);
  }
}
BENCHMARK(CurvatureBundleEval);

static void FlowRhsKxcf(benchmark::State& state) {
  const StructureConstants C = StructureConstants::hyperbolic_model();
  const FlowSpec spec = FlowSpec::make(FlowKind::KXCF, -1.0);
  Mat3 gm = Mat3::Identity();
  gm(1, 1) = 1.01;
  const FrameMetric g(gm);
  for (auto _ : state) {
    SymTensor2 rhs = flow_rhs(spec, g, C);
    benchmark::DoNotOptimize(rhs);
  }
}
BENCHMARK(FlowRhsKxcf);

static void IntegrateKxcf(benchmark::State& state) {
  const StructureConstants C = StructureConstants::hyperbolic_model();
  const FlowSpec spec = FlowSpec::make(FlowKind::KXCF, -1.0);
  Mat3 g0 = Mat3::Identity();
  g0(0, 0) = 1.01;
  const double t_end = static_cast<double>(state.range(0));
  for (auto _ : state) {
    Trajectory traj = integrate(spec, FrameMetric(g0), t_end, 1e-10, C);
    benchmark::DoNotOptimize(traj.metrics.back());
  }
}
BENCHMARK(IntegrateKxcf)->Arg(1)->Arg(4);

static void FrameJacobianDxcf(benchmark::State& state) {
  const StructureConstants C = StructureConstants::hyperbolic_model();
  const FrameMetric id = FrameMetric::identity();
  const FlowSpec spec = FlowSpec::make(FlowKind::DXCF, -1.0, id);
  for (auto _ : state) {
    LinearizationReport rep = frame_jacobian(spec, id, C);
    benchmark::DoNotOptimize(rep.jacobian);
  }
}
BENCHMARK(FrameJacobianDxcf);

static void ChartCurvaturePoincare(benchmark::State& state) {
  const ChartContext ctx(static_cast<int>(state.range(0)), 0.5);
  const ChartField g = poincare_chart(ctx);
  for (auto _ : state) {
    ChartCurvature curv = chart_curvature(ctx, g);
    benchmark::DoNotOptimize(curv.scalar);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(ChartCurvaturePoincare)->Arg(17)->Arg(33)->Complexity();

static void QuadratureBump(benchmark::State& state) {
  const ChartContext ctx(33, 0.5);
  const ChartField g = poincare_chart(ctx);
  ChartField f(ctx, FieldRank::Scalar);
  const ChartField h = bump_tensor(ctx, 5, Vec3::Zero(), 0.35 * 0.5);
  for (std::int64_t node = 0; node < ctx.nodes(); ++node)
    f.at(0, node) = h.at(0, node) * h.at(0, node);
  for (auto _ : state) {
    double v = l2_quadrature(ctx, g, f);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(QuadratureBump);

BENCHMARK_MAIN();
