#include <benchmark/benchmark.h>

#include "rotpba/linear_solvers.hpp"
#include "rotpba/lm_solver.hpp"
#include "rotpba/simulator.hpp"

namespace {

using namespace rotpba;

struct Fixture {
  Problem problem;
  OptState state;
  StateLayout layout;

  Fixture() {
    problem.camera = CameraModel{64, 48, 40.0, 40.0, 31.5, 23.5};
    ProceduralScene scene;
    scene.seed = 3;
    const DenseMap sim_map = rasterize(scene.field(), PanoramaGeometry{1024, 512});
    SinusoidalMotion motion;
    motion.amplitude_deg = {10.0, 6.0, 3.0};
    motion.frequency_hz = {2.0, 1.5, 1.0};
    const RotationTrajectory gt = motion.sample(0.0, 0.5, 20.0);
    const EventStream events = simulate_events(sim_map, problem.camera, gt, EGMParams::symmetric(0.2), 2e-4);
    problem.pairs = pair_events(events, {0.0, 0.5}, problem.camera.width, problem.camera.height).pairs;
    state = make_initial_state(problem, perturb_poses(gt, 1.0, 5), PanoramaGeometry{256, 128});
    layout = make_layout(state, GaugePolicy::kFixFirstPose, false);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_EvaluateLoss(benchmark::State& st) {
  const Fixture& f = fixture();
  for (auto _ : st) benchmark::DoNotOptimize(evaluate_loss(f.state, f.problem, 0.2, {}));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(f.problem.pairs.size()));
}
BENCHMARK(BM_EvaluateLoss)->Unit(benchmark::kMillisecond);

void BM_BuildNormalEquations(benchmark::State& st) {
  const Fixture& f = fixture();
  for (auto _ : st) benchmark::DoNotOptimize(build_normal_equations(f.state, f.problem, f.layout, {}));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(f.problem.pairs.size()));
}
BENCHMARK(BM_BuildNormalEquations)->Unit(benchmark::kMillisecond);

void BM_LinearSolve(benchmark::State& st) {
  const Fixture& f = fixture();
  const NormalEquations ne = build_normal_equations(f.state, f.problem, f.layout, {});
  LinearSolveOptions options;
  options.kind = st.range(0) == 0 ? LinearSolverKind::kCholesky : LinearSolverKind::kCg;
  LinearSolver solver(options);
  for (auto _ : st) benchmark::DoNotOptimize(solver.solve(ne, 1e-3));
  st.SetLabel(to_string(options.kind));
}
BENCHMARK(BM_LinearSolve)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
