#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rotpba/densify.hpp"
#include "rotpba/evaluation.hpp"
#include "rotpba/io.hpp"
#include "rotpba/lm_solver.hpp"
#include "rotpba/simulator.hpp"
#include "rotpba/version.hpp"

namespace rotpba::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return kExitConfig;
    case ErrorKind::kSolver:
    case ErrorKind::kDensify:
      return kExitSolver;
    default:
      return kExitData;
  }
}

std::string file_sha256(const std::string& path) {
  const std::string data = read_file(path);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::kIo, "sha256 failed for " + path);
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

namespace {

// ---------------------------------------------------------------------------------------------
// Option parsing helpers

struct Shared {
  std::string config;
  std::string out_dir = ".";
  bool deterministic = false;
  std::string loss = "quadratic";
  double contrast = 0.2;
  double pose_freq = 20.0;
  std::string map_size = "1024x512";
  std::string solver = "cholesky";
  std::string window;
  int threads = 0;
};

std::pair<int, int> parse_size(const std::string& text, const char* what) {
  const auto x = text.find('x');
  int w = 0, h = 0;
  bool ok = x != std::string::npos;
  if (ok) {
    auto r1 = std::from_chars(text.data(), text.data() + x, w);
    auto r2 = std::from_chars(text.data() + x + 1, text.data() + text.size(), h);
    ok = r1.ec == std::errc() && r1.ptr == text.data() + x && r2.ec == std::errc() &&
         r2.ptr == text.data() + text.size();
  }
  if (!ok || w <= 0 || h <= 0) throw Error(ErrorKind::kConfig, std::string(what) + ": expected WxH, got '" + text + "'");
  return {w, h};
}

PanoramaGeometry parse_map_size(const std::string& text) {
  const auto [w, h] = parse_size(text, "--map-size");
  PanoramaGeometry geom{w, h};
  try {
    geom.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfig, std::string("--map-size: ") + e.what());
  }
  return geom;
}

std::optional<TimeWindow> parse_window(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto colon = text.find(':');
  TimeWindow w;
  bool ok = colon != std::string::npos;
  if (ok) {
    auto r1 = std::from_chars(text.data(), text.data() + colon, w.begin);
    auto r2 = std::from_chars(text.data() + colon + 1, text.data() + text.size(), w.end);
    ok = r1.ec == std::errc() && r1.ptr == text.data() + colon && r2.ec == std::errc() &&
         r2.ptr == text.data() + text.size();
  }
  if (!ok) throw Error(ErrorKind::kConfig, "--window: expected T0:T1, got '" + text + "'");
  if (!(w.end > w.begin)) throw Error(ErrorKind::kConfig, "--window: T1 must exceed T0");
  return w;
}

Vec3 parse_vec3(const std::string& text, const char* what) {
  Vec3 v;
  std::istringstream in(text);
  std::string part;
  int i = 0;
  while (std::getline(in, part, ',')) {
    if (i >= 3) break;
    try {
      std::size_t used = 0;
      v[i] = std::stod(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kConfig, std::string(what) + ": expected three comma-separated numbers");
    }
    ++i;
  }
  if (i != 3 || in.rdbuf()->in_avail() > 0) {
    throw Error(ErrorKind::kConfig, std::string(what) + ": expected three comma-separated numbers");
  }
  return v;
}

int resolve_threads(const Shared& sh) {
  if (sh.deterministic) return 1;
  if (sh.threads > 0) return sh.threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

SolverConfig solver_config(const Shared& sh) {
  SolverConfig cfg;
  cfg.loss.kind = parse_loss_kind(sh.loss);
  cfg.contrast = sh.contrast;
  cfg.linear.kind = parse_linear_solver(sh.solver);
  cfg.threads = resolve_threads(sh);
  return cfg;
}

void add_shared(CLI::App* sub, Shared& sh) {
  sub->add_option("--config", sh.config, "Flat key = value file; keys mirror flag names");
  sub->add_option("--out-dir", sh.out_dir, "Output directory")->capture_default_str();
  sub->add_flag("--deterministic", sh.deterministic, "Sequential accumulation (bit-reproducible)");
  sub->add_option("--loss", sh.loss, "quadratic|huber|cauchy")->capture_default_str();
  sub->add_option("--contrast", sh.contrast, "Contrast threshold C")->capture_default_str();
  sub->add_option("--pose-freq", sh.pose_freq, "Control-pose frequency f (Hz)")->capture_default_str();
  sub->add_option("--map-size", sh.map_size, "Panorama size WxH (W = 2H)")->capture_default_str();
  sub->add_option("--solver", sh.solver, "cholesky|cg")->capture_default_str();
  sub->add_option("--window", sh.window, "Optimization window T0:T1 (seconds)");
  sub->add_option("--threads", sh.threads, "Worker threads (0 = all cores)")->capture_default_str();
}

// Values from --config are appended as ordinary flags unless the flag is already on the command line.
std::vector<std::string> expand_config(CLI::App& app, const std::vector<std::string>& args) {
  if (args.size() < 2) return args;
  CLI::App* sub = app.get_subcommand_no_throw(args[1]);
  if (!sub) return args;
  std::string config_path;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;

  const KeyValues kv = KeyValues::load(config_path);
  std::vector<std::string> out = args;
  for (const auto& [key, value] : kv.entries()) {
    if (key == "config") continue;
    const std::string flag = "--" + key;
    const bool given = std::any_of(args.begin() + 2, args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (given) continue;
    CLI::Option* opt = sub->get_option_no_throw(flag);
    if (!opt) throw Error(ErrorKind::kConfig, config_path + ": unknown key '" + key + "' for " + args[1]);
    if (opt->get_type_size() == 0) {
      if (kv.get_bool(key)) out.push_back(flag);
    } else {
      out.push_back(flag + "=" + value);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Output bookkeeping

class RunRecord {
 public:
  RunRecord(std::string command, const CLI::App* sub, std::string out_dir)
      : command_(std::move(command)), sub_(sub), out_dir_(std::move(out_dir)) {}

  std::string path(const std::string& name) const { return (fs::path(out_dir_) / name).string(); }

  void input(const std::string& role, const std::string& p) { inputs_.emplace_back(role, p); }
  void output(const std::string& name) { outputs_.push_back(name); }
  json& extra() { return extra_; }

  std::vector<std::pair<std::string, std::string>> config() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const CLI::Option* opt : sub_->get_options()) {
      const std::string name = opt->get_single_name();
      if (name.empty() || name == "help" || name == "config") continue;
      std::string value;
      if (opt->get_type_size() == 0) {
        value = opt->count() > 0 ? "true" : "false";
      } else if (opt->count() > 0) {
        value = opt->as<std::string>();
      } else {
        value = opt->get_default_str();
      }
      out.emplace_back(name, value);
    }
    return out;
  }

  // run_config.txt (replayable via --config) and manifest.json, both written last.
  void finish() {
    KeyValues kv;
    json cfg = json::object();
    for (const auto& [k, v] : config()) {
      if (k == "out-dir") continue;
      if (!v.empty()) kv.set(k, v);
      cfg[k] = v;
    }
    write_file_atomic(path("run_config.txt"), kv.format());
    output("run_config.txt");

    json manifest;
    manifest["tool"] = "rotpba";
    manifest["version"] = kVersion;
    manifest["command"] = command_;
    manifest["config"] = cfg;
    json inputs = json::object();
    for (const auto& [role, p] : inputs_) inputs[role] = {{"path", p}, {"sha256", file_sha256(p)}};
    manifest["inputs"] = inputs;
    json outputs = json::object();
    for (const std::string& name : outputs_) outputs[name] = {{"sha256", file_sha256(path(name))}};
    manifest["outputs"] = outputs;
    if (!extra_.empty()) manifest["results"] = extra_;
    write_file_atomic(path("manifest.json"), manifest.dump(2) + "\n");
  }

 private:
  std::string command_;
  const CLI::App* sub_;
  std::string out_dir_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::string> outputs_;
  json extra_ = json::object();
};

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create output directory " + dir);
}

void write_metrics(RunRecord& rec, const MetricsReport& metrics, std::ostream& out) {
  write_file_atomic(rec.path("metrics.csv"), metrics.csv());
  write_file_atomic(rec.path("metrics.txt"), metrics.summary());
  rec.output("metrics.csv");
  rec.output("metrics.txt");
  for (const auto& [k, v] : metrics.values) rec.extra()[k] = v;
  out << metrics.summary();
}

void write_map_outputs(RunRecord& rec, const PanoramaMap& map, const DenseMap* dense) {
  save_map_raw(map.values(), rec.path("map_semidense.raw"));
  save_map_pgm(map.values(), rec.path("map_semidense.pgm"), &map.mask());
  save_mask_pgm(map.mask(), map.geometry(), rec.path("mask.pgm"));
  rec.output("map_semidense.raw");
  rec.output("map_semidense.pgm");
  rec.output("map_semidense.pgm.tonemap");
  rec.output("mask.pgm");
  if (dense) {
    save_map_raw(*dense, rec.path("map_dense.raw"));
    save_map_pgm(*dense, rec.path("map_dense.pgm"));
    rec.output("map_dense.raw");
    rec.output("map_dense.pgm");
    rec.output("map_dense.pgm.tonemap");
  }
}

// ---------------------------------------------------------------------------------------------
// Shared data loading

struct LoadedProblem {
  Problem problem;
  RotationTrajectory trajectory;
  TimeWindow window;
  PairingResult pairing;
  std::size_t events_total = 0;
  std::size_t events_outside_span = 0;
};

// Events + calibration + trajectory resampled to uniform control poses at f over the window.
LoadedProblem load_problem(const std::string& events_path, const std::string& calib_path,
                           const std::string& traj_path, const Shared& sh) {
  if (!(sh.pose_freq > 0.0)) throw Error(ErrorKind::kConfig, "--pose-freq must be positive");
  LoadedProblem lp;
  lp.problem.camera = load_calibration(calib_path);
  EventStream events = load_events(events_path);
  lp.events_total = events.size();
  const StampedTrajectory source = load_trajectory(traj_path);

  TimeWindow window;
  if (auto w = parse_window(sh.window)) {
    window = *w;
    if (!source.contains(window.begin) || !source.contains(window.end)) {
      throw Error(ErrorKind::kQuery, "--window is not covered by the trajectory");
    }
  } else {
    window.begin = source.begin_time();
    window.end = source.end_time();
    if (!events.empty()) {
      window.begin = std::max(window.begin, events.front().t);
      window.end = std::min(window.end, events.back().t);
    }
    if (!(window.end > window.begin)) throw Error(ErrorKind::kIngest, "events and trajectory do not overlap");
  }
  lp.trajectory = resample_uniform(source, window.begin, window.end, sh.pose_freq);
  window.end = std::min(window.end, lp.trajectory.end_time());
  lp.window = window;
  lp.events_outside_span = clip_to_span(events, lp.trajectory.begin_time(), lp.trajectory.end_time());
  lp.pairing = pair_events(events, window, lp.problem.camera.width, lp.problem.camera.height);
  lp.problem.pairs = lp.pairing.pairs;
  return lp;
}

std::optional<DenseMap> load_optional_map(const std::string& path, const PanoramaGeometry& geom) {
  if (path.empty()) return std::nullopt;
  DenseMap m = load_map_raw(path);
  if (m.width() != geom.width || m.height() != geom.height) {
    throw Error(ErrorKind::kConfig, path + ": map size does not match --map-size");
  }
  return m;
}

void log_iterations(const LmReport& report, std::ostream& out) {
  for (const IterationRecord& r : report.log) {
    out << "  iter " << std::setw(3) << r.iter << "  lambda " << std::scientific << std::setprecision(1) << r.lambda
        << "  phe " << std::defaultfloat << std::setprecision(8) << r.phe << (r.accepted ? "  accepted" : "  rejected")
        << "\n";
  }
  out << "termination: " << to_string(report.termination) << "\n";
}

// ---------------------------------------------------------------------------------------------
// Commands

struct SimulateOptions {
  std::string scene = "noise";
  std::string gt_map;
  double scene_amplitude = 1.0;
  double scene_scale = 12.0;
  double edge_width = 2.0;
  std::uint64_t seed = 1;
  double duration = 1.0;
  double t_begin = 0.0;
  std::string motion_amplitude = "10,6,3";
  std::string motion_frequency = "2,1.5,1";
  std::string motion_phase = "0,1,2";
  std::string camera = "128x96";
  double fx = 81.5;
  double fy = 0.0;
  double dt_sample = 2e-4;
  int sim_oversample = 4;
  double pose_noise = 0.0;
  double flip_fraction = 0.0;
  bool gzip = false;
};

int cmd_simulate(const SimulateOptions& o, const Shared& sh, const CLI::App* sub, std::ostream& out) {
  const PanoramaGeometry geom = parse_map_size(sh.map_size);
  const auto [cw, ch] = parse_size(o.camera, "--camera");
  CameraModel cam{cw, ch, o.fx, o.fy > 0.0 ? o.fy : o.fx, 0.5 * (cw - 1), 0.5 * (ch - 1)};
  cam.validate();
  if (!(sh.contrast > 0.0)) throw Error(ErrorKind::kConfig, "--contrast must be positive");
  if (o.sim_oversample < 0) throw Error(ErrorKind::kConfig, "--sim-oversample must be >= 0");

  SinusoidalMotion motion;
  motion.amplitude_deg = parse_vec3(o.motion_amplitude, "--motion-amplitude");
  motion.frequency_hz = parse_vec3(o.motion_frequency, "--motion-frequency");
  motion.phase = parse_vec3(o.motion_phase, "--motion-phase");
  const RotationTrajectory gt = motion.sample(o.t_begin, o.duration, sh.pose_freq);

  ensure_dir(sh.out_dir);
  RunRecord rec("simulate", sub, sh.out_dir);

  DenseMap gt_map;
  EventStream events;
  SimulationStats stats;
  const EGMParams params = EGMParams::symmetric(sh.contrast);
  if (!o.gt_map.empty()) {
    gt_map = load_map_raw(o.gt_map);
    rec.input("gt_map", o.gt_map);
    events = simulate_events(gt_map, cam, gt, params, o.dt_sample, &stats);
  } else {
    ProceduralScene scene;
    scene.kind = parse_scene_kind(o.scene);
    scene.amplitude = o.scene_amplitude;
    scene.scale_deg = o.scene_scale;
    scene.edge_width_deg = o.edge_width;
    scene.seed = o.seed;
    const LogIntensityField field = scene.field();
    gt_map = rasterize(field, geom);
    if (o.sim_oversample > 0) {
      const PanoramaGeometry fine{geom.width * o.sim_oversample, geom.height * o.sim_oversample};
      events = simulate_events(rasterize(field, fine), cam, gt, params, o.dt_sample, &stats);
    } else {
      events = simulate_events(field, cam, gt, params, o.dt_sample, &stats);
    }
  }
  std::size_t flipped = 0;
  if (o.flip_fraction > 0.0) flipped = flip_polarities(events, o.flip_fraction, o.seed + 2);

  const std::string events_name = o.gzip ? "events.txt.gz" : "events.txt";
  save_events(events, rec.path(events_name));
  save_trajectory(gt.to_stamped(), rec.path("gt_trajectory.txt"));
  save_map_raw(gt_map, rec.path("gt_map.raw"));
  save_map_pgm(gt_map, rec.path("gt_map.pgm"));
  save_calibration(cam, rec.path("calibration.txt"));
  for (const char* name : {"gt_trajectory.txt", "gt_map.raw", "gt_map.pgm", "gt_map.pgm.tonemap", "calibration.txt"}) {
    rec.output(name);
  }
  rec.output(events_name);
  if (o.pose_noise > 0.0) {
    save_trajectory(perturb_poses(gt, o.pose_noise, o.seed + 1).to_stamped(), rec.path("init_trajectory.txt"));
    rec.output("init_trajectory.txt");
  }

  rec.extra()["events"] = events.size();
  rec.extra()["positive"] = stats.positive;
  rec.extra()["negative"] = stats.negative;
  rec.extra()["flipped"] = flipped;
  rec.finish();
  out << "simulated " << events.size() << " events (" << stats.positive << " positive, " << stats.negative
      << " negative";
  if (flipped > 0) out << ", " << flipped << " flipped";
  out << ") into " << sh.out_dir << "\n";
  return kExitOk;
}

struct SolveOptions {
  std::string events;
  std::string calibration;
  std::string init_trajectory;
  std::string init_map;
  std::string gt_trajectory;
  std::string gt_map;
  int max_iterations = 50;
  double lambda0 = 1e-3;
  std::string gauge = "first";
  double cg_tolerance = 1e-6;
  double t0 = NAN;
  bool no_densify = false;
  int histogram_bins = 60;
};

GaugePolicy parse_gauge(const std::string& s) {
  if (s == "first") return GaugePolicy::kFixFirstPose;
  if (s == "free") return GaugePolicy::kFree;
  throw Error(ErrorKind::kConfig, "--gauge: expected first|free, got '" + s + "'");
}

int cmd_solve(const SolveOptions& o, const Shared& sh, const CLI::App* sub, std::ostream& out) {
  const PanoramaGeometry geom = parse_map_size(sh.map_size);
  SolverConfig cfg = solver_config(sh);
  cfg.max_iterations = o.max_iterations;
  cfg.lambda0 = o.lambda0;
  cfg.gauge = parse_gauge(o.gauge);
  cfg.linear.cg_tolerance = o.cg_tolerance;
  cfg.validate();

  LoadedProblem lp = load_problem(o.events, o.calibration, o.init_trajectory, sh);
  if (lp.problem.pairs.empty()) throw Error(ErrorKind::kIngest, "no residual pairs inside the window");
  const std::optional<DenseMap> init_map = load_optional_map(o.init_map, geom);
  std::optional<StampedTrajectory> gt;
  if (!o.gt_trajectory.empty()) gt = load_trajectory(o.gt_trajectory);
  const std::optional<DenseMap> gt_map = load_optional_map(o.gt_map, geom);

  ensure_dir(sh.out_dir);
  RunRecord rec("solve", sub, sh.out_dir);
  rec.input("events", o.events);
  rec.input("calibration", o.calibration);
  rec.input("init_trajectory", o.init_trajectory);
  if (init_map) rec.input("init_map", o.init_map);
  if (gt) rec.input("gt_trajectory", o.gt_trajectory);
  if (gt_map) rec.input("gt_map", o.gt_map);

  OptState state = make_initial_state(lp.problem, lp.trajectory, geom, init_map ? &*init_map : nullptr);
  const double t0 = std::isnan(o.t0) ? lp.trajectory.begin_time() : o.t0;
  const std::vector<double> res_init = residual_values(state, lp.problem, cfg.contrast);
  const Histogram hist_init = residual_histogram(res_init, cfg.contrast, o.histogram_bins);
  double are_init = NAN;
  if (gt) are_init = are_rmse(align_at(state.trajectory, *gt, t0));

  out << "solve: " << lp.problem.pairs.size() << " pairs, " << state.map.state_size() << " valid pixels, "
      << state.trajectory.size() << " control poses\n";
  const LmReport report = lm_run(state, lp.problem, cfg);
  log_iterations(report, out);

  const std::vector<double> res_final = residual_values(state, lp.problem, cfg.contrast);
  const Histogram hist_final = residual_histogram(res_final, cfg.contrast, o.histogram_bins);

  std::optional<DenseMap> dense;
  DensifyReport dreport;
  if (!o.no_densify && state.map.state_size() > 0) dense = densify(state.map, {}, &dreport);

  save_trajectory(state.trajectory.to_stamped(), rec.path("trajectory.txt"));
  rec.output("trajectory.txt");
  write_map_outputs(rec, state.map, dense ? &*dense : nullptr);
  write_iteration_log(report.log, rec.path("iterations.csv"));
  rec.output("iterations.csv");
  write_file_atomic(rec.path("histogram_init.csv"), histogram_csv(hist_init));
  write_file_atomic(rec.path("histogram_final.csv"), histogram_csv(hist_final));
  rec.output("histogram_init.csv");
  rec.output("histogram_final.csv");

  MetricsReport m;
  m.add("events", static_cast<double>(lp.events_total));
  m.add("pairs", static_cast<double>(lp.problem.pairs.size()));
  m.add("first_events", static_cast<double>(lp.pairing.first_events.size()));
  m.add("valid_pixels", static_cast<double>(state.map.state_size()));
  m.add("control_poses", static_cast<double>(state.trajectory.size()));
  m.add("phe_init", report.initial.phe);
  m.add("phe_final", report.final.phe);
  m.add("phe_ratio", report.initial.phe > 0.0 ? report.final.phe / report.initial.phe : 0.0);
  m.add("robust_loss_init", report.initial.robust_loss);
  m.add("robust_loss_final", report.final.robust_loss);
  m.add("skipped_init", static_cast<double>(report.initial.skipped));
  m.add("skipped_final", static_cast<double>(report.final.skipped));
  m.add("fraction_below_half_c_init", fraction_below(res_init, 0.5 * cfg.contrast));
  m.add("fraction_below_half_c_final", fraction_below(res_final, 0.5 * cfg.contrast));
  m.add("iterations", report.iterations);
  m.add("accepted_steps", report.accepted_steps);
  if (gt) {
    m.add("are_init_deg", are_init);
    m.add("are_final_deg", are_rmse(align_at(state.trajectory, *gt, t0)));
  }
  if (gt_map) {
    const MapComparison mc = compare_map(state, lp.problem, *gt_map);
    m.add("map_correlation", mc.correlation);
    m.add("map_rms", mc.rms);
  }
  write_metrics(rec, m, out);
  rec.extra()["termination"] = to_string(report.termination);
  rec.finish();
  if (report.termination == Termination::kLambdaLimit) {
    out << "warning: no descent step found before the damping limit; the state is a stationary point\n";
  }
  return kExitOk;
}

struct MapOnlyOptions {
  std::string events;
  std::string calibration;
  std::string trajectory;
  std::string init_map;
  std::string gt_map;
  int max_iterations = 50;
  bool no_densify = false;
};

int cmd_map_only(const MapOnlyOptions& o, const Shared& sh, const CLI::App* sub, std::ostream& out) {
  const PanoramaGeometry geom = parse_map_size(sh.map_size);
  SolverConfig cfg = solver_config(sh);
  cfg.max_iterations = o.max_iterations;
  cfg.validate();

  LoadedProblem lp = load_problem(o.events, o.calibration, o.trajectory, sh);
  const std::optional<DenseMap> init_map = load_optional_map(o.init_map, geom);
  const std::optional<DenseMap> gt_map = load_optional_map(o.gt_map, geom);

  ensure_dir(sh.out_dir);
  RunRecord rec("map-only", sub, sh.out_dir);
  rec.input("events", o.events);
  rec.input("calibration", o.calibration);
  rec.input("trajectory", o.trajectory);
  if (init_map) rec.input("init_map", o.init_map);
  if (gt_map) rec.input("gt_map", o.gt_map);

  OptState state = make_initial_state(lp.problem, lp.trajectory, geom, init_map ? &*init_map : nullptr);
  out << "map-only: " << lp.problem.pairs.size() << " pairs, " << state.map.state_size() << " valid pixels\n";
  const LmReport report = map_only_run(state, lp.problem, cfg);
  log_iterations(report, out);

  std::optional<DenseMap> dense;
  if (!o.no_densify && state.map.state_size() > 0) dense = densify(state.map);
  write_map_outputs(rec, state.map, dense ? &*dense : nullptr);
  write_iteration_log(report.log, rec.path("iterations.csv"));
  rec.output("iterations.csv");

  MetricsReport m;
  m.add("pairs", static_cast<double>(lp.problem.pairs.size()));
  m.add("valid_pixels", static_cast<double>(state.map.state_size()));
  m.add("phe_init", report.initial.phe);
  m.add("phe_final", report.final.phe);
  m.add("iterations", report.iterations);
  if (gt_map) {
    const MapComparison mc = compare_map(state, lp.problem, *gt_map);
    m.add("map_correlation", mc.correlation);
    m.add("map_rms", mc.rms);
    m.add("map_components", mc.components);
  }
  write_metrics(rec, m, out);
  rec.extra()["termination"] = to_string(report.termination);
  rec.finish();
  return kExitOk;
}

struct DensifyCmdOptions {
  std::string map;
  std::string mask;
};

int cmd_densify(const DensifyCmdOptions& o, const Shared& sh, const CLI::App* sub, std::ostream& out) {
  DenseMap values = load_map_raw(o.map);
  ValidMask mask(values.size(), 1);
  if (!o.mask.empty()) {
    PanoramaGeometry mg;
    mask = load_mask_pgm(o.mask, &mg);
    if (mg.width != values.width() || mg.height != values.height()) {
      throw Error(ErrorKind::kConfig, "mask size does not match the map");
    }
  }
  ensure_dir(sh.out_dir);
  RunRecord rec("densify", sub, sh.out_dir);
  rec.input("map", o.map);
  if (!o.mask.empty()) rec.input("mask", o.mask);

  const PanoramaMap map(std::move(values), std::move(mask));
  DensifyReport report;
  const DenseMap dense = densify(map, {}, &report);
  save_map_raw(dense, rec.path("map_dense.raw"));
  save_map_pgm(dense, rec.path("map_dense.pgm"));
  rec.output("map_dense.raw");
  rec.output("map_dense.pgm");
  rec.output("map_dense.pgm.tonemap");

  MetricsReport m;
  m.add("valid_pixels", static_cast<double>(map.state_size()));
  m.add("cg_iterations", report.iterations);
  m.add("relative_residual", report.relative_residual);
  write_metrics(rec, m, out);
  rec.finish();
  return kExitOk;
}

struct EvalOptions {
  std::string trajectory;
  std::string gt_trajectory;
  double t0 = NAN;
  double rate = 0.0;
  std::string events;
  std::string calibration;
  std::string map;
  std::string mask;
  int histogram_bins = 60;
};

int cmd_eval(const EvalOptions& o, const Shared& sh, const CLI::App* sub, std::ostream& out) {
  const StampedTrajectory est = load_trajectory(o.trajectory);
  const StampedTrajectory gt = load_trajectory(o.gt_trajectory);
  const double t0 = std::isnan(o.t0) ? std::max(est.begin_time(), gt.begin_time()) : o.t0;
  const AlignedTrajectoryPair pair = align_at(est, gt, t0);
  const double are = o.rate > 0.0 ? are_rmse(pair, fixed_rate_stamps(pair, o.rate)) : are_rmse(pair);

  ensure_dir(sh.out_dir);
  RunRecord rec("eval", sub, sh.out_dir);
  rec.input("trajectory", o.trajectory);
  rec.input("gt_trajectory", o.gt_trajectory);

  MetricsReport m;
  m.add("are_deg", are);
  if (!o.events.empty() || !o.map.empty()) {
    if (o.events.empty() || o.calibration.empty() || o.map.empty() || o.mask.empty()) {
      throw Error(ErrorKind::kConfig, "photometric metrics need --events, --calibration, --map and --mask");
    }
    LoadedProblem lp = load_problem(o.events, o.calibration, o.trajectory, sh);
    DenseMap values = load_map_raw(o.map);
    PanoramaGeometry mg;
    ValidMask mask = load_mask_pgm(o.mask, &mg);
    if (mg.width != values.width() || mg.height != values.height()) {
      throw Error(ErrorKind::kConfig, "mask size does not match the map");
    }
    const OptState state{lp.trajectory, PanoramaMap(std::move(values), std::move(mask))};
    const std::vector<double> res = residual_values(state, lp.problem, sh.contrast);
    double sum = 0.0;
    for (double e : res) sum += e * e;
    m.add("phe", sum);
    m.add("residuals", static_cast<double>(res.size()));
    m.add("skipped", static_cast<double>(lp.problem.pairs.size() - res.size()));
    write_file_atomic(rec.path("histogram.csv"), histogram_csv(residual_histogram(res, sh.contrast, o.histogram_bins)));
    rec.output("histogram.csv");
    for (const auto& [role, p] : {std::pair<std::string, std::string>{"events", o.events},
                                  {"calibration", o.calibration}, {"map", o.map}, {"mask", o.mask}}) {
      rec.input(role, p);
    }
  }
  write_metrics(rec, m, out);
  rec.finish();
  return kExitOk;
}

void print_error(std::ostream& err, const std::string& kind, int code, const std::string& message) {
  json line;
  line["error"] = {{"kind", kind}, {"exit_code", code}, {"message", message}};
  err << line.dump() << std::endl;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Photometric bundle adjustment for rotating event cameras", "rotpba"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  Shared sh;
  SimulateOptions sim;
  SolveOptions solve;
  MapOnlyOptions mo;
  DensifyCmdOptions dn;
  EvalOptions ev;

  CLI::App* s_sim = app.add_subcommand("simulate", "Simulate events from a panorama and a rotation trajectory");
  add_shared(s_sim, sh);
  s_sim->add_option("--scene", sim.scene, "noise|checkerboard|step-grid|step-edge|constant")->capture_default_str();
  s_sim->add_option("--gt-map", sim.gt_map, "Ground-truth panorama (raw float32) instead of a procedural scene");
  s_sim->add_option("--scene-amplitude", sim.scene_amplitude, "Log-intensity amplitude")->capture_default_str();
  s_sim->add_option("--scene-scale", sim.scene_scale, "Feature size (degrees)")->capture_default_str();
  s_sim->add_option("--edge-width", sim.edge_width, "Edge transition width (degrees)")->capture_default_str();
  s_sim->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  s_sim->add_option("--duration", sim.duration, "Duration (s)")->capture_default_str();
  s_sim->add_option("--t-begin", sim.t_begin, "Start time (s)")->capture_default_str();
  s_sim->add_option("--motion-amplitude", sim.motion_amplitude, "Sinusoid amplitudes ax,ay,az (degrees)")
      ->capture_default_str();
  s_sim->add_option("--motion-frequency", sim.motion_frequency, "Sinusoid frequencies fx,fy,fz (Hz)")
      ->capture_default_str();
  s_sim->add_option("--motion-phase", sim.motion_phase, "Sinusoid phases (rad)")->capture_default_str();
  s_sim->add_option("--camera", sim.camera, "Sensor size WxH")->capture_default_str();
  s_sim->add_option("--fx", sim.fx, "Focal length (px)")->capture_default_str();
  s_sim->add_option("--fy", sim.fy, "Vertical focal length (px, 0 = fx)")->capture_default_str();
  s_sim->add_option("--dt-sample", sim.dt_sample, "Simulator time step (s)")->capture_default_str();
  s_sim->add_option("--sim-oversample", sim.sim_oversample,
                    "Render the scene at this multiple of the map size for simulation (0 = exact field)")
      ->capture_default_str();
  s_sim->add_option("--pose-noise", sim.pose_noise, "Also write an initial trajectory perturbed by this RMS angle (deg)")
      ->capture_default_str();
  s_sim->add_option("--flip-fraction", sim.flip_fraction, "Fraction of event polarities to flip")->capture_default_str();
  s_sim->add_flag("--gzip", sim.gzip, "Write events.txt.gz");

  CLI::App* s_solve = app.add_subcommand("solve", "Jointly refine trajectory and map");
  add_shared(s_solve, sh);
  s_solve->add_option("--events", solve.events, "Event file")->required();
  s_solve->add_option("--calibration", solve.calibration, "Calibration file")->required();
  s_solve->add_option("--init-trajectory", solve.init_trajectory, "Initial trajectory")->required();
  s_solve->add_option("--init-map", solve.init_map, "Initial map (raw); zero map if omitted");
  s_solve->add_option("--gt-trajectory", solve.gt_trajectory, "Ground truth for ARE metrics");
  s_solve->add_option("--gt-map", solve.gt_map, "Ground-truth map (raw) for map metrics");
  s_solve->add_option("--max-iterations", solve.max_iterations, "LM iterations")->capture_default_str();
  s_solve->add_option("--lambda0", solve.lambda0, "Initial damping")->capture_default_str();
  s_solve->add_option("--gauge", solve.gauge, "first|free")->capture_default_str();
  s_solve->add_option("--cg-tolerance", solve.cg_tolerance, "CG relative residual")->capture_default_str();
  s_solve->add_option("--t0", solve.t0, "Alignment time for ARE (default: window start)");
  s_solve->add_flag("--no-densify", solve.no_densify, "Skip Poisson densification");
  s_solve->add_option("--histogram-bins", solve.histogram_bins, "Residual histogram bins")->capture_default_str();

  CLI::App* s_mo = app.add_subcommand("map-only", "Refine the map with the trajectory frozen");
  add_shared(s_mo, sh);
  s_mo->add_option("--events", mo.events, "Event file")->required();
  s_mo->add_option("--calibration", mo.calibration, "Calibration file")->required();
  s_mo->add_option("--trajectory", mo.trajectory, "Frozen trajectory")->required();
  s_mo->add_option("--init-map", mo.init_map, "Initial map (raw)");
  s_mo->add_option("--gt-map", mo.gt_map, "Ground-truth map (raw) for map metrics");
  s_mo->add_option("--max-iterations", mo.max_iterations, "LM iterations")->capture_default_str();
  s_mo->add_flag("--no-densify", mo.no_densify, "Skip Poisson densification");

  CLI::App* s_dn = app.add_subcommand("densify", "Poisson densification of a semi-dense map");
  add_shared(s_dn, sh);
  s_dn->add_option("--map", dn.map, "Semi-dense map (raw)")->required();
  s_dn->add_option("--mask", dn.mask, "Valid mask (PGM); all pixels valid if omitted");

  CLI::App* s_ev = app.add_subcommand("eval", "Trajectory and photometric metrics");
  add_shared(s_ev, sh);
  s_ev->add_option("--trajectory", ev.trajectory, "Estimated trajectory")->required();
  s_ev->add_option("--gt-trajectory", ev.gt_trajectory, "Ground-truth trajectory")->required();
  s_ev->add_option("--t0", ev.t0, "Alignment time (default: common start)");
  s_ev->add_option("--rate", ev.rate, "Evaluate at a fixed rate (Hz) instead of the estimate's stamps")
      ->capture_default_str();
  s_ev->add_option("--events", ev.events, "Event file for PhE");
  s_ev->add_option("--calibration", ev.calibration, "Calibration file for PhE");
  s_ev->add_option("--map", ev.map, "Map (raw) for PhE");
  s_ev->add_option("--mask", ev.mask, "Valid mask (PGM) for PhE");
  s_ev->add_option("--histogram-bins", ev.histogram_bins, "Residual histogram bins")->capture_default_str();

  try {
    const std::vector<std::string> expanded = expand_config(app, args);
    std::vector<const char*> argv;
    argv.reserve(expanded.size());
    for (const std::string& a : expanded) argv.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
      out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
      return kExitOk;
    } catch (const CLI::CallForVersion&) {
      out << kVersion << "\n";
      return kExitOk;
    } catch (const CLI::ParseError& e) {
      print_error(err, "config", kExitConfig, e.what());
      return kExitConfig;
    }

    if (s_sim->parsed()) return cmd_simulate(sim, sh, s_sim, out);
    if (s_solve->parsed()) return cmd_solve(solve, sh, s_solve, out);
    if (s_mo->parsed()) return cmd_map_only(mo, sh, s_mo, out);
    if (s_dn->parsed()) return cmd_densify(dn, sh, s_dn, out);
    if (s_ev->parsed()) return cmd_eval(ev, sh, s_ev, out);
    print_error(err, "config", kExitConfig, "no subcommand");
    return kExitConfig;
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    print_error(err, to_string(e.kind()), code, e.what());
    return code;
  } catch (const std::exception& e) {
    print_error(err, "internal", kExitData, e.what());
    return kExitData;
  }
}

}  // namespace rotpba::cli
