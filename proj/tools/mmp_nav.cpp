// Command-line driver: single runs, batch sweeps and field dumps for plotting.
#include "mmp/config_io.hpp"
#include "mmp/controller.hpp"
#include "mmp/sim.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace mmp;

namespace {

std::vector<Mode> parse_modes(const std::vector<std::string>& names) {
  std::vector<Mode> out;
  for (const auto& n : names) out.push_back(mode_from_string(n));
  return out;
}

int cmd_run(const std::string& config_path, const std::string& mode_name, std::optional<std::uint64_t> seed,
            std::optional<double> theta, const fs::path& out_dir) {
  ScenarioConfig cfg = load_scenario(config_path);
  if (seed) cfg.seed = *seed;
  if (theta) cfg.start.theta = *theta;
  const Mode mode = mode_from_string(mode_name);
  const RunRecord rec = run_scenario(cfg, mode);
  fs::create_directories(out_dir);
  const fs::path traj = out_dir / (cfg.name + "_" + to_string(mode) + "_trajectory.csv");
  write_trajectory_csv(rec, traj);
  std::printf("%s %s seed=%llu outcome=%s timespan=%.3f infeasible=%d min_clearance=%.4f\n", cfg.name.c_str(),
              to_string(mode), static_cast<unsigned long long>(rec.seed), to_string(rec.outcome), rec.timespan,
              rec.infeasible_steps, rec.min_clearance);
  if (!rec.error.empty()) std::printf("error: %s\n", rec.error.c_str());
  std::printf("trajectory: %s\n", traj.string().c_str());
  return rec.outcome == Outcome::Error ? 2 : 0;
}

int cmd_batch(const std::vector<std::string>& config_paths, const std::vector<std::string>& mode_names,
              std::optional<std::uint64_t> seed, int orientations, const fs::path& out_dir, bool trajectories) {
  std::vector<ScenarioConfig> configs;
  for (const auto& p : config_paths) {
    configs.push_back(load_scenario(p));
    if (seed) configs.back().seed = *seed;
  }
  const BatchResult batch = run_batch(configs, parse_modes(mode_names), orientations);
  fs::create_directories(out_dir);
  write_metrics_csv(batch.table, out_dir / "metrics.csv");
  write_metrics_json(batch, out_dir / "metrics.json");
  if (trajectories) {
    for (const auto& r : batch.runs) {
      char name[256];
      std::snprintf(name, sizeof name, "%s_%s_seed%llu.csv", r.scenario.c_str(), to_string(r.mode),
                    static_cast<unsigned long long>(r.seed));
      write_trajectory_csv(r, out_dir / name);
    }
  }
  std::printf("%-16s %-9s %5s %6s %7s %11s %9s %12s\n", "scenario", "mode", "runs", "safety", "success",
              "infeasible", "timespan", "runtime_ms");
  for (const auto& r : batch.table) {
    char span[32] = "--";
    if (r.timespan_mean) std::snprintf(span, sizeof span, "%.2f", *r.timespan_mean);
    std::printf("%-16s %-9s %5d %6d %7d %11d %9s %6.2f+-%.2f\n", r.scenario.c_str(), to_string(r.mode), r.runs,
                r.safety, r.success, r.infeasible_steps, span, 1e3 * r.runtime_mean, 1e3 * r.runtime_std);
    if (r.errored > 0) std::printf("  (%d errored runs excluded)\n", r.errored);
  }
  std::printf("metrics: %s\n", (out_dir / "metrics.csv").string().c_str());
  return 0;
}

int cmd_inspect(const std::string& config_path, const std::string& mode_name, double time,
                const std::vector<std::string>& probmaps, const fs::path& out_dir) {
  ScenarioConfig cfg = load_scenario(config_path);
  ControllerConfig cc = cfg.controller;
  cc.mode = mode_from_string(mode_name);
  cc.dt = cfg.dt;

  std::mt19937_64 rng(cfg.seed);
  std::vector<ObstacleTrack> tracks;
  for (int k = 0; k * cfg.dt <= time + 1e-12; ++k) step_pedestrians(cfg, k * cfg.dt, rng, tracks);

  WorldSnapshot world;
  world.time = time;
  world.robot = cfg.start;
  world.robot.model = cc.model;
  world.robot.offset = cc.a;
  world.target = cfg.target;
  world.static_obstacles = cfg.static_obstacles;
  world.tracks = tracks;
  for (const auto& spec : probmaps) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--probmap", "expected TRACK_ID=PATH");
    world.probmaps[spec.substr(0, eq)] = load_probmap_stack(spec.substr(eq + 1));
  }

  Controller controller(cc);
  const StepOutput step = controller.step(world);
  fs::create_directories(out_dir);

  const auto& barriers = controller.barriers();
  const Point2 xi = world.robot.point_of_interest();
  Eigen::AlignedBox2d box(xi);
  box.extend(world.target);
  for (const auto& b : barriers) box.extend(b.model->bounds());
  box.min() -= Vec2::Constant(cc.map_margin);
  box.max() += Vec2::Constant(cc.map_margin);

  std::ofstream grid_out(out_dir / "sbar_grid.csv");
  grid_out << "x,y,sbar\n";
  if (!barriers.empty()) {
    const auto sbar = combined_distance(barriers, cc.rho, time);
    const ScalarGrid grid = rasterize(sbar, box, cc.map_resolution);
    for (int iy = 0; iy < grid.height; ++iy)
      for (int ix = 0; ix < grid.width; ++ix) {
        const Point2 c = grid.cell_center(ix, iy);
        grid_out << c.x() << ',' << c.y() << ',' << grid.at(ix, iy) << '\n';
      }
    std::ofstream contour_out(out_dir / "contours.csv");
    contour_out << "contour,x,y\n";
    const auto contours = extract_level_contours(grid, sbar(xi));
    for (std::size_t i = 0; i < contours.size(); ++i)
      for (const auto& p : contours[i].vertices) contour_out << i << ',' << p.x() << ',' << p.y() << '\n';
  }

  std::ofstream efrs_out(out_dir / "efrs.csv");
  efrs_out << "id,source,x,y\n";
  for (const auto& e : controller.predicted_sets())
    for (const auto& p : e.boundary.vertices)
      efrs_out << e.obstacle_id << ',' << (e.source == EfrsSource::Cvm ? "cvm" : "probmap") << ',' << p.x() << ','
               << p.y() << '\n';

  std::printf("barriers=%zu efrs=%zu feasible=%d u=(%.4f, %.4f) beta=%.5f%s\n", barriers.size(),
              controller.predicted_sets().size(), step.diagnostics.feasible ? 1 : 0, step.u.v, step.u.omega,
              step.diagnostics.beta, step.diagnostics.beta_fallback ? " (fallback)" : "");
  if (step.diagnostics.phi)
    std::printf("phi=(%.4f, %.4f)\n", (*step.diagnostics.phi)(0), (*step.diagnostics.phi)(1));
  std::printf("output: %s\n", out_dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reactive navigation with modulated control barrier functions"};
  app.require_subcommand(1);

  std::string config, mode = "MMP_MCBF";
  std::optional<std::uint64_t> seed;
  std::string out = "out";

  auto* run = app.add_subcommand("run", "Simulate one scenario");
  std::optional<double> theta;
  run->add_option("-c,--config", config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("-m,--mode", mode, "CBF, MCBF, MMP_CBF or MMP_MCBF");
  run->add_option("-s,--seed", seed, "Override the scenario seed");
  run->add_option("--theta", theta, "Override the initial heading (rad)");
  run->add_option("-o,--out", out, "Output directory");

  auto* batch = app.add_subcommand("batch", "Sweep scenarios x modes x initial orientations");
  std::vector<std::string> configs;
  std::vector<std::string> modes{"CBF", "MCBF", "MMP_CBF", "MMP_MCBF"};
  int orientations = 10;
  bool trajectories = false;
  batch->add_option("-c,--config", configs, "Scenario JSON files")->required()->check(CLI::ExistingFile);
  batch->add_option("-m,--mode", modes, "Modes to evaluate");
  batch->add_option("-s,--seed", seed, "Override the base seed");
  batch->add_option("-n,--orientations", orientations, "Initial orientations per scenario")
      ->check(CLI::PositiveNumber);
  batch->add_option("-o,--out", out, "Output directory");
  batch->add_flag("--trajectories", trajectories, "Also write every trajectory");

  auto* inspect = app.add_subcommand("inspect", "Dump s-bar grid, isolines and predicted sets at one instant");
  double time = 0.0;
  std::vector<std::string> probmaps;
  inspect->add_option("-c,--config", config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  inspect->add_option("-m,--mode", mode, "Controller mode");
  inspect->add_option("-t,--time", time, "Snapshot time (s)");
  inspect->add_option("--probmap", probmaps, "TRACK_ID=PATH probability-map stack");
  inspect->add_option("-o,--out", out, "Output directory");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config, mode, seed, theta, out);
    if (*batch) return cmd_batch(configs, modes, seed, orientations, out, trajectories);
    if (*inspect) return cmd_inspect(config, mode, time, probmaps, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
