#pragma once

// Active reconstruction: observe -> spawn -> optimize -> belief update -> plan -> move.

#include <random>
#include <string>
#include <vector>

#include "gaussmi/belief.hpp"
#include "gaussmi/camera.hpp"
#include "gaussmi/image_io.hpp"
#include "gaussmi/metrics.hpp"
#include "gaussmi/optimizer.hpp"
#include "gaussmi/planner.hpp"
#include "gaussmi/scene.hpp"

namespace gaussmi {

enum class Policy { gauss_mi, random };
enum class LoopStatus { max_steps, terminated, deadlock };

inline const char* to_string(LoopStatus s) {
  switch (s) {
    case LoopStatus::max_steps: return "max_steps";
    case LoopStatus::terminated: return "terminated";
    default: return "deadlock";
  }
}

struct LoopRecord {
  int step = 0;
  int frames = 0;             // N_f
  double path_length = 0.0;   // cumulative, meters
  double mi = 0.0;            // MI of the executed candidate
  double max_safe_mi = 0.0;   // best MI among safe candidates (gauss_mi policy only)
  double cost = 0.0;          // snap cost J of the executed primitive
  double done_fraction = 0.0;
  double psnr = 0.0;          // mean over held-out views
  std::size_t map_size = 0;
};

struct LoopResult {
  GaussianMap map;
  std::vector<LoopRecord> log;
  std::vector<MotionPrimitive> executed;
  std::vector<Viewpoint> poses;  // one per captured frame
  LoopStatus status = LoopStatus::max_steps;
};

constexpr int kPathSamples = 100;

/// Length of the polyline through kPathSamples + 1 uniform samples of the primitive.
inline double primitive_path_length(const MotionPrimitive& prim, int samples = kPathSamples) {
  double len = 0.0;
  Vec3 prev = primitive_sample(prim, 0.0).position;
  for (int s = 1; s <= samples; ++s) {
    const Vec3 p = primitive_sample(prim, prim.duration * s / samples).position;
    len += (p - prev).norm();
    prev = p;
  }
  return len;
}

/// Mean PSNR of the map against ground truth over `views`.
inline double heldout_psnr(const GaussianMap& map, const GroundTruthScene& scene, const std::vector<Viewpoint>& views,
                           const CameraIntrinsics& k) {
  if (views.empty()) return 0.0;
  double s = 0.0;
  for (const auto& v : views) s += psnr(rasterize(map, v, k).color, rasterize(scene.gaussians, v, k).color);
  return s / static_cast<double>(views.size());
}

/// Config as used inside the loop: scene workspace and resolved depth scale.
inline SystemConfig effective_config(const GroundTruthScene& scene, SystemConfig cfg) {
  cfg.workspace_min = scene.workspace_min;
  cfg.workspace_max = scene.workspace_max;
  if (cfg.depth_scale <= 0.0) cfg.depth_scale = scene.extent();
  return cfg;
}

class ActiveReconstruction {
 public:
  ActiveReconstruction(const GroundTruthScene& scene, const SystemConfig& cfg, std::uint64_t seed)
      : scene_(scene), cfg_(effective_config(scene, cfg)), rng_(seed) {
    cfg_.validate();
    heldout_ = heldout_views(scene_, cfg_.heldout_views);
  }

  const SystemConfig& config() const { return cfg_; }
  const GaussianMap& map() const { return map_; }
  const std::vector<Viewpoint>& heldout() const { return heldout_; }

  /// Captures a frame at `pose` and folds it into the map and the beliefs.
  void integrate(const Viewpoint& pose) {
    const CameraIntrinsics& k = cfg_.camera;
    Observation obs = groundtruth_observe(scene_, pose, k);

    // Spawn only where the current map leaves the pixel mostly transparent.
    Observation masked = obs;
    if (!map_.empty()) {
      const RenderOutput r = rasterize(map_, pose, k);
      for (std::size_t j = 0; j < masked.depth.pixel_count(); ++j)
        if (1.0 - r.residual_T[j] >= 0.5) masked.depth[j] = 0.0;
    }
    for (auto& g : backproject_spawn(masked, k, cfg_.spawn_stride, cfg_.init_opacity)) map_.push_back(g);

    keyframes_.push_back(std::move(obs));
    if (static_cast<int>(keyframes_.size()) > cfg_.keyframe_cap) {
      std::uniform_int_distribution<std::size_t> pick(0, keyframes_.size() - 2);
      keyframes_.erase(keyframes_.begin() + static_cast<std::ptrdiff_t>(pick(rng_)));
    }

    if (!map_.empty() && cfg_.opt_iters > 0) {
      const auto window = keyframe_window();
      optimize_step(map_, window, k, cfg_.opt_iters, cfg_.opt_lr, {cfg_.lambda_c, cfg_.depth_scale});
    }
    update_probabilities(map_, keyframes_.back(), k, cfg_);
  }

  /// Runs up to `max_steps` planning steps after the initial frame. With
  /// `stop_on_termination` unset the loop spends the whole frame budget.
  LoopResult run(Policy policy, int max_steps, bool stop_on_termination = true) {
    LoopResult res;
    Viewpoint state = scene_.start;
    double path = 0.0;

    integrate(state);
    res.poses.push_back(state);
    res.log.push_back(record(0, 1, path, 0.0, 0.0, 0.0));

    for (int step = 1; step <= max_steps; ++step) {
      if (stop_on_termination && terminated(map_, cfg_)) {
        res.status = LoopStatus::terminated;
        break;
      }
      std::vector<Candidate> cands = evaluate_candidates(map_, state, cfg_, policy == Policy::gauss_mi);
      const Candidate* chosen = nullptr;
      double max_mi = 0.0;
      try {
        if (policy == Policy::gauss_mi) {
          chosen = &best_candidate(cands);
          for (const auto& c : cands)
            if (c.safe) max_mi = std::max(max_mi, c.mi);
        } else {
          std::vector<const Candidate*> safe;
          for (const auto& c : cands)
            if (c.safe) safe.push_back(&c);
          if (safe.empty()) throw PlannerDeadlock();
          std::uniform_int_distribution<std::size_t> pick(0, safe.size() - 1);
          chosen = safe[pick(rng_)];
        }
      } catch (const PlannerDeadlock&) {
        res.status = LoopStatus::deadlock;
        break;
      }
      if (!safety_check(chosen->primitive, map_, cfg_)) {
        res.status = LoopStatus::deadlock;
        break;
      }
      const double mi = policy == Policy::gauss_mi
                            ? chosen->mi
                            : evaluate_gauss_mi(map_, chosen->goal, cfg_.camera, cfg_.noise).total_mi;

      path += primitive_path_length(chosen->primitive);
      state = primitive_sample(chosen->primitive, chosen->primitive.duration);
      res.executed.push_back(chosen->primitive);

      integrate(state);
      res.poses.push_back(state);
      res.log.push_back(record(step, static_cast<int>(res.poses.size()), path, mi, chosen->cost, max_mi));
    }
    if (res.status == LoopStatus::max_steps && terminated(map_, cfg_)) res.status = LoopStatus::terminated;
    res.map = map_;
    return res;
  }

 private:
  std::vector<Observation> keyframe_window() {
    const std::size_t n = keyframes_.size();
    const std::size_t want = static_cast<std::size_t>(std::max(1, cfg_.opt_keyframes));
    if (n <= want) return keyframes_;
    std::vector<std::size_t> older(n - 1);
    std::iota(older.begin(), older.end(), 0);
    std::shuffle(older.begin(), older.end(), rng_);
    std::vector<Observation> w{keyframes_.back()};
    for (std::size_t i = 0; i + 1 < want; ++i) w.push_back(keyframes_[older[i]]);
    return w;
  }

  LoopRecord record(int step, int frames, double path, double mi, double cost, double max_mi) const {
    LoopRecord r;
    r.step = step;
    r.frames = frames;
    r.path_length = path;
    r.mi = mi;
    r.max_safe_mi = max_mi;
    r.cost = cost;
    r.done_fraction = done_fraction(map_, cfg_.tau);
    r.psnr = heldout_psnr(map_, scene_, heldout_, cfg_.camera);
    r.map_size = map_.size();
    return r;
  }

  const GroundTruthScene& scene_;
  SystemConfig cfg_;
  std::mt19937_64 rng_;
  GaussianMap map_;
  std::vector<Observation> keyframes_;
  std::vector<Viewpoint> heldout_;
};

inline LoopResult run_active_loop(const GroundTruthScene& scene, const SystemConfig& cfg, Policy policy, int max_steps,
                                  std::uint64_t seed, bool stop_on_termination = true) {
  ActiveReconstruction loop(scene, cfg, seed);
  return loop.run(policy, max_steps, stop_on_termination);
}

inline const std::vector<std::string>& loop_csv_header() {
  static const std::vector<std::string> h{"step",          "frames", "path_length", "mi", "max_safe_mi", "cost",
                                          "done_fraction", "psnr",   "map_size"};
  return h;
}

inline void write_loop_csv(const std::vector<LoopRecord>& log, const std::string& path) {
  std::vector<std::vector<double>> rows;
  for (const auto& r : log)
    rows.push_back({static_cast<double>(r.step), static_cast<double>(r.frames), r.path_length, r.mi, r.max_safe_mi,
                    r.cost, r.done_fraction, r.psnr, static_cast<double>(r.map_size)});
  write_csv(path, loop_csv_header(), rows);
}

}  // namespace gaussmi
