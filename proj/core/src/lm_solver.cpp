#include "rotpba/lm_solver.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "rotpba/errors.hpp"

namespace rotpba {

std::string to_string(Termination t) {
  switch (t) {
    case Termination::kRelativeDecrease: return "relative_decrease";
    case Termination::kSmallStep: return "small_step";
    case Termination::kMaxIterations: return "max_iterations";
    case Termination::kLambdaLimit: return "lambda_limit";
    case Termination::kNoResiduals: return "no_residuals";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  loss.validate();
  if (!(contrast > 0.0)) throw Error(ErrorKind::kConfig, "contrast threshold must be positive");
  if (!(lambda0 > 0.0) || !(lambda_factor > 1.0) || !(max_lambda > lambda0)) {
    throw Error(ErrorKind::kConfig, "invalid damping schedule");
  }
  if (max_iterations < 0) throw Error(ErrorKind::kConfig, "max_iterations must be non-negative");
  if (!(relative_decrease_tol > 0.0) || !(step_tol > 0.0) || !(linear.cg_tolerance > 0.0)) {
    throw Error(ErrorKind::kConfig, "tolerances must be positive");
  }
}

namespace {

void apply_step(OptState& state, const StateLayout& layout, const Eigen::VectorXd& delta) {
  for (std::size_t i = 0; i < layout.num_poses; ++i) {
    const std::int64_t col = layout.pose_column(i);
    if (col < 0) continue;
    state.trajectory.apply_left_update(i, delta.segment<3>(col));
  }
  const auto pd = static_cast<Eigen::Index>(layout.pose_dim());
  state.map.apply_update(std::span<const double>(delta.data() + pd, layout.map_size));
}

[[noreturn]] void non_finite(int iter, double lambda, const LossSummary& s) {
  std::ostringstream os;
  os << "non-finite loss at iteration " << iter << " (lambda=" << lambda << ", phe=" << s.phe
     << ", robust=" << s.robust_loss << ", used=" << s.used << ", skipped=" << s.skipped << ")";
  throw Error(ErrorKind::kSolver, os.str());
}

LmReport run(OptState& state, const Problem& problem, const SolverConfig& config) {
  config.validate();
  const StateLayout layout = make_layout(state, config.gauge, config.map_only);
  const BuildOptions build{config.contrast, config.loss, config.threads};

  LmReport report;
  report.initial = evaluate_loss(state, problem, config.contrast, config.loss);
  if (!std::isfinite(report.initial.robust_loss)) non_finite(0, config.lambda0, report.initial);
  report.final = report.initial;
  report.log.push_back({0, config.lambda0, report.initial.phe, report.initial.robust_loss, 0.0, 0.0,
                        true, report.initial.skipped});
  if (report.initial.used == 0 || layout.dim() == 0) {
    report.termination = Termination::kNoResiduals;
    report.final_lambda = config.lambda0;
    return report;
  }

  double lambda = config.lambda0;
  LossSummary current = report.initial;
  report.termination = Termination::kMaxIterations;
  bool done = false;
  LinearSolver solver(config.linear);

  for (int iter = 1; iter <= config.max_iterations && !done; ++iter) {
    report.iterations = iter;
    const NormalEquations ne = build_normal_equations(state, problem, layout, build);

    while (true) {
      const LinearSolveResult step = solver.solve(ne, lambda);
      if (step.cg_capped) ++report.cg_capped_solves;
      const auto pd = static_cast<Eigen::Index>(layout.pose_dim());
      IterationRecord rec;
      rec.iter = iter;
      rec.lambda = lambda;
      rec.step_norm_pose = pd > 0 ? step.delta.head(pd).lpNorm<Eigen::Infinity>() : 0.0;
      rec.step_norm_map = layout.map_size > 0 ? step.delta.tail(layout.map_size).lpNorm<Eigen::Infinity>() : 0.0;
      const double step_inf = std::max(rec.step_norm_pose, rec.step_norm_map);
      if (!std::isfinite(step_inf)) non_finite(iter, lambda, current);

      if (step_inf < config.step_tol) {
        rec.phe = current.phe;
        rec.robust_loss = current.robust_loss;
        rec.skipped_pairs = current.skipped;
        report.log.push_back(rec);
        report.termination = Termination::kSmallStep;
        done = true;
        break;
      }

      OptState candidate = state;
      apply_step(candidate, layout, step.delta);
      const LossSummary trial = evaluate_loss(candidate, problem, config.contrast, config.loss);
      if (!std::isfinite(trial.robust_loss)) non_finite(iter, lambda, trial);
      rec.phe = trial.phe;
      rec.robust_loss = trial.robust_loss;
      rec.skipped_pairs = trial.skipped;

      if (trial.robust_loss < current.robust_loss) {
        rec.accepted = true;
        report.log.push_back(rec);
        ++report.accepted_steps;
        const double decrease = (current.robust_loss - trial.robust_loss) /
                                std::max(current.robust_loss, 1e-300);
        state = std::move(candidate);
        current = trial;
        lambda = std::max(lambda / config.lambda_factor, 1e-12);
        if (decrease < config.relative_decrease_tol) {
          report.termination = Termination::kRelativeDecrease;
          done = true;
        }
        break;
      }

      report.log.push_back(rec);
      lambda *= config.lambda_factor;
      if (lambda > config.max_lambda) {
        report.termination = Termination::kLambdaLimit;
        done = true;
        break;
      }
    }
  }

  report.final = current;
  report.final_lambda = lambda;
  return report;
}

}  // namespace

OptState make_initial_state(const Problem& problem, RotationTrajectory trajectory,
                            const PanoramaGeometry& geom, const DenseMap* initial_map) {
  geom.validate();
  if (initial_map && (initial_map->width() != geom.width || initial_map->height() != geom.height)) {
    throw Error(ErrorKind::kConfig, "initial map size does not match the map geometry");
  }
  ValidMask mask = build_valid_mask(problem.pairs, problem.camera, geom, trajectory);
  DenseMap values = initial_map ? *initial_map : DenseMap(geom, 0.0);
  return OptState{std::move(trajectory), PanoramaMap(std::move(values), std::move(mask))};
}

LmReport lm_run(OptState& state, const Problem& problem, const SolverConfig& config) {
  return run(state, problem, config);
}

LmReport map_only_run(OptState& state, const Problem& problem, const SolverConfig& config) {
  ValidMask mask = build_valid_mask(problem.pairs, problem.camera, state.map.geometry(), state.trajectory);
  state.map = PanoramaMap(state.map.values(), std::move(mask));
  SolverConfig cfg = config;
  cfg.map_only = true;
  return run(state, problem, cfg);
}

void write_iteration_log(const std::vector<IterationRecord>& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write iteration log " + path);
  out << "iter,lambda,phe,robust_loss,step_norm_pose,step_norm_map,accepted,skipped_pairs\n";
  out.precision(12);
  for (const IterationRecord& r : log) {
    out << r.iter << ',' << r.lambda << ',' << r.phe << ',' << r.robust_loss << ','
        << r.step_norm_pose << ',' << r.step_norm_map << ',' << (r.accepted ? 1 : 0) << ','
        << r.skipped_pairs << '\n';
  }
}

}  // namespace rotpba
