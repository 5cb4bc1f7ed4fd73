// gaussmi_cli: simulator and evaluation front end.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "gaussmi/gaussmi.hpp"

using namespace gaussmi;
namespace fs = std::filesystem;

namespace {

bool is_toy(const std::string& s) { return s == "box" || s == "cylinder" || s == "twin"; }

// A scene argument is a toy-scene name or a scene sidecar file.
GroundTruthScene scene_arg(const std::string& s) { return is_toy(s) ? make_toy_scene(s) : load_scene(s); }

SystemConfig config_arg(const std::string& path) { return path.empty() ? SystemConfig{} : load_config(path); }

std::string frame_name(const std::string& prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04zu", prefix.c_str(), i);
  return buf;
}

void write_poses(const std::vector<Viewpoint>& poses, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.precision(17);
  out << "# x,y,z,yaw\n";
  for (const auto& p : poses)
    out << p.position.x() << "," << p.position.y() << "," << p.position.z() << "," << p.yaw << "\n";
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::vector<Viewpoint> read_poses(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open pose list '" + path.string() + "'");
  std::vector<Viewpoint> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    out.push_back(parse_pose(t, path.string() + ":" + std::to_string(n)));
  }
  if (out.empty()) throw Error("pose list '" + path.string() + "' is empty");
  return out;
}

struct SimulateArgs {
  std::string scene, config, policy = "gauss-mi", out;
  std::uint64_t seed = 0;
  int max_steps = 50;
  bool fixed_budget = false;
};

int simulate(const SimulateArgs& a) {
  const GroundTruthScene scene = scene_arg(a.scene);
  const SystemConfig cfg = config_arg(a.config);
  const Policy policy = a.policy == "random" ? Policy::random : Policy::gauss_mi;

  ActiveReconstruction sim(scene, cfg, a.seed);
  const LoopResult res = sim.run(policy, a.max_steps, !a.fixed_budget);
  const CameraIntrinsics& k = sim.config().camera;

  const fs::path out(a.out);
  fs::create_directories(out / "frames");
  fs::create_directories(out / "testset");
  save_map(res.map, (out / "map.ply").string());
  write_loop_csv(res.log, (out / "log.csv").string());
  write_poses(res.poses, out / "trajectory.txt");
  for (std::size_t i = 0; i < res.poses.size(); ++i) {
    const Observation obs = groundtruth_observe(scene, res.poses[i], k);
    write_ppm(obs.color, (out / "frames" / (frame_name("frame", i) + ".ppm")).string());
    write_pfm(obs.depth, (out / "frames" / (frame_name("depth", i) + ".pfm")).string());
  }
  write_poses(sim.heldout(), out / "testset" / "poses.txt");
  for (std::size_t i = 0; i < sim.heldout().size(); ++i)
    write_ppm(rasterize(scene.gaussians, sim.heldout()[i], k).color,
              (out / "testset" / (frame_name("view", i) + ".ppm")).string());

  const LoopRecord& last = res.log.back();
  std::printf("status %s\nframes %d\npath_length %.4f\npsnr %.4f\ndone_fraction %.4f\nmap_size %zu\n",
              to_string(res.status), last.frames, last.path_length, last.psnr, last.done_fraction, last.map_size);
  return 0;
}

int render(const std::string& map_path, const std::string& pose, const std::string& config, const std::string& out,
           const std::string& depth_out) {
  const GaussianMap map = load_map(map_path);
  const SystemConfig cfg = config_arg(config);
  const RenderOutput r = rasterize(map, parse_pose(pose), cfg.camera);
  write_ppm(r.color, out);
  if (!depth_out.empty()) write_pfm(r.depth, depth_out);
  std::printf("visible %zu\n", r.visible_gaussians);
  return 0;
}

int mi(const std::string& map_path, const std::string& pose, const std::string& config, const std::string& image_out) {
  const GaussianMap map = load_map(map_path);
  const SystemConfig cfg = config_arg(config);
  const MIResult r = evaluate_gauss_mi(map, parse_pose(pose), cfg.camera, cfg.noise);
  if (!image_out.empty()) write_pfm(r.mi_image, image_out);
  std::printf("total_mi %.10g\ngaussians %zu\ncontributions %zu\n", r.total_mi, r.gaussians_touched, r.contributions);
  return 0;
}

int plan(const std::string& map_path, const std::string& state, const std::string& config) {
  const GaussianMap map = load_map(map_path);
  const SystemConfig cfg = config_arg(config);
  cfg.validate();
  std::vector<Candidate> cands = evaluate_candidates(map, parse_pose(state), cfg, true);
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.safe != b.safe) return a.safe;
    return a.reward > b.reward;
  });
  std::printf("%5s %6s %7s %7s %7s %5s %12s %12s %12s\n", "rank", "action", "v_xy", "v_z", "omega_z", "safe", "I", "J",
              "R");
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const auto& c = cands[i];
    std::printf("%5zu %6zu %7.3f %7.3f %7.3f %5s %12.6g %12.6g %12.6g\n", i + 1, c.action_index, c.action.v_xy,
                c.action.v_z, c.action.omega_z, c.safe ? "yes" : "no", c.mi, c.cost, c.reward);
  }
  const Candidate& best = best_candidate(cands);  // throws PlannerDeadlock when nothing is safe
  std::printf("chosen %zu\n", best.action_index);
  return 0;
}

struct MetricsArgs {
  std::string map, scene, testset, config, sparsification_csv;
  double log_base = 10.0;
  int frames = 0;
};

int metrics(const MetricsArgs& a) {
  const GaussianMap map = load_map(a.map);
  const GroundTruthScene scene = scene_arg(a.scene);
  const SystemConfig cfg = config_arg(a.config);
  const auto views = read_poses(fs::path(a.testset) / "poses.txt");
  const CameraIntrinsics& k = cfg.camera;

  std::vector<std::vector<double>> rows;
  double sum_psnr = 0.0, sum_ssim = 0.0, sum_ause = 0.0;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const Image pred = rasterize(map, views[i], k).color;
    const Image gt = rasterize(scene.gaussians, views[i], k).color;
    const double p = psnr(pred, gt), s = ssim(pred, gt);
    const auto curve = sparsification(abs_error_image(pred, gt), evaluate_gauss_mi(map, views[i], k, cfg.noise).mi_image);
    const double u = ause(curve);
    sum_psnr += p;
    sum_ssim += s;
    sum_ause += u;
    std::printf("view %zu psnr %.4f ssim %.4f ause %.4f\n", i, p, s, u);
    for (std::size_t f = 0; f < curve.fractions.size(); ++f)
      rows.push_back({static_cast<double>(i), curve.fractions[f], curve.mae[f], curve.oracle_mae[f]});
  }
  const double n = static_cast<double>(views.size());
  std::printf("mean psnr %.4f\nmean ssim %.4f\nmean ause %.4f\n", sum_psnr / n, sum_ssim / n, sum_ause / n);
  if (a.frames > 0) std::printf("efficiency %.4f\n", efficiency(sum_psnr / n, a.frames, a.log_base));
  if (!a.sparsification_csv.empty())
    write_csv(a.sparsification_csv, {"view", "fraction", "mae", "oracle_mae"}, rows);
  return 0;
}

int make_scene(const std::string& kind, const std::string& out) {
  fs::path p(out);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  const GroundTruthScene s = make_toy_scene(kind);
  save_scene(s, out);
  std::printf("gaussians %zu\n", s.gaussians.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active Gaussian-splatting reconstruction simulator"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Run the active reconstruction loop");
  c_sim->add_option("--scene", sim.scene, "Toy scene name (box, cylinder, twin) or scene file")->required();
  c_sim->add_option("--config", sim.config, "Config file (defaults when omitted)");
  c_sim->add_option("--policy", sim.policy, "View selection policy")
      ->check(CLI::IsMember({"gauss-mi", "random"}));
  c_sim->add_option("--seed", sim.seed, "Random seed");
  c_sim->add_option("--max-steps", sim.max_steps, "Planning steps after the first frame")->check(CLI::NonNegativeNumber);
  c_sim->add_flag("--fixed-budget", sim.fixed_budget, "Ignore the termination test and spend every step");
  c_sim->add_option("--out", sim.out, "Output directory")->required();

  std::string map_path, pose, config, out, extra;
  auto* c_render = app.add_subcommand("render", "Render a map from a pose");
  c_render->add_option("--map", map_path, "Map file (.ply)")->required()->check(CLI::ExistingFile);
  c_render->add_option("--pose", pose, "x,y,z,yaw")->required();
  c_render->add_option("--config", config, "Config file for the camera");
  c_render->add_option("--out", out, "Color image (.ppm)")->required();
  c_render->add_option("--depth", extra, "Depth image (.pfm)");

  auto* c_mi = app.add_subcommand("mi", "Evaluate mutual information at a pose");
  c_mi->add_option("--map", map_path, "Map file (.ply)")->required()->check(CLI::ExistingFile);
  c_mi->add_option("--pose", pose, "x,y,z,yaw")->required();
  c_mi->add_option("--config", config, "Config file for camera and noise model");
  c_mi->add_option("--mi-image", extra, "Per-pixel MI image (.pfm)");

  auto* c_plan = app.add_subcommand("plan", "Rank motion primitives from a state");
  c_plan->add_option("--map", map_path, "Map file (.ply)")->required()->check(CLI::ExistingFile);
  c_plan->add_option("--state", pose, "x,y,z,yaw (at rest)")->required();
  c_plan->add_option("--config", config, "Config file");

  MetricsArgs met;
  auto* c_met = app.add_subcommand("metrics", "PSNR, SSIM, efficiency and AUSE on a test set");
  c_met->add_option("--map", met.map, "Map file (.ply)")->required()->check(CLI::ExistingFile);
  c_met->add_option("--scene", met.scene, "Toy scene name or scene file")->required();
  c_met->add_option("--testset", met.testset, "Directory holding poses.txt")->required()->check(CLI::ExistingDirectory);
  c_met->add_option("--config", met.config, "Config file");
  c_met->add_option("--frames", met.frames, "Frame count N_f for the efficiency score");
  c_met->add_option("--log-base", met.log_base, "Logarithm base of the efficiency score");
  c_met->add_option("--sparsification", met.sparsification_csv, "Sparsification curves (.csv)");

  std::string kind = "box";
  auto* c_scene = app.add_subcommand("make-scene", "Write a toy scene to disk");
  c_scene->add_option("--kind", kind, "Scene kind")->check(CLI::IsMember({"box", "cylinder", "twin"}));
  c_scene->add_option("--out", out, "Scene file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c_sim) return simulate(sim);
    if (*c_render) return render(map_path, pose, config, out, extra);
    if (*c_mi) return mi(map_path, pose, config, extra);
    if (*c_plan) return plan(map_path, pose, config);
    if (*c_met) return metrics(met);
    if (*c_scene) return make_scene(kind, out);
  } catch (const PlannerDeadlock& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
