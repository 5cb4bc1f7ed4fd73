#pragma once

// Per-step photometric/geometric refinement of color, opacity and position with analytic
// gradients through the front-to-back blending.

#include <algorithm>
#include <span>
#include <vector>

#include "gaussmi/loss.hpp"
#include "gaussmi/renderer.hpp"

namespace gaussmi {

constexpr double kPruneOpacity = 0.005;

struct MapGradients {
  double loss = 0.0;
  std::vector<Vec3> color;
  std::vector<double> opacity;
  std::vector<Vec3> position;
};

/// Mean loss over keyframes (each a mean over pixels) and its gradient.
/// The position gradient flows through the projected mean and the ray distance; the
/// dependence of the 2D covariance on position is not differentiated.
inline MapGradients loss_and_gradients(const GaussianMap& map, std::span<const Observation> keyframes,
                                       const CameraIntrinsics& k, const LossWeights& w) {
  MapGradients g;
  g.color.assign(map.size(), Vec3::Zero());
  g.opacity.assign(map.size(), 0.0);
  g.position.assign(map.size(), Vec3::Zero());
  if (keyframes.empty()) return g;

  const double norm = 1.0 / (static_cast<double>(keyframes.size()) * static_cast<double>(k.pixel_count()));
  std::vector<Vec2> grad_mean(map.size());
  std::vector<double> grad_dist(map.size());

  for (const auto& obs : keyframes) {
    const RenderOutput r = rasterize(map, obs.pose, k);
    std::fill(grad_mean.begin(), grad_mean.end(), Vec2::Zero());
    std::fill(grad_dist.begin(), grad_dist.end(), 0.0);

    std::vector<std::optional<Projected2D>> proj(map.size());
    std::vector<Mat2> conic(map.size());
    for (const auto& p : project_and_sort(map, obs.pose, k)) {
      const auto i = static_cast<std::size_t>(p.gaussian_index);
      proj[i] = p;
      conic[i] = p.cov2d.inverse();
    }

    for (std::size_t j = 0; j < r.pixel_count(); ++j) {
      const Vec3 rc(r.color[3 * j], r.color[3 * j + 1], r.color[3 * j + 2]);
      const Vec3 oc(obs.color[3 * j], obs.color[3 * j + 1], obs.color[3 * j + 2]);
      const PixelLoss pl = pixel_loss(rc, r.depth[j], oc, obs.depth[j], w);
      g.loss += pl.value * norm;
      const Vec3 gc = pl.d_color * norm;
      const double gd = pl.d_depth * norm;
      if (gc.isZero() && gd == 0.0) continue;

      const auto list = r.pixel(j);
      const int x = static_cast<int>(j % static_cast<std::size_t>(k.width));
      const int y = static_cast<int>(j / static_cast<std::size_t>(k.width));
      Vec3 behind_color = Vec3::Zero();  // sum over later contributors of c_k T_k
      double behind_depth = 0.0;
      for (auto it = list.rbegin(); it != list.rend(); ++it) {
        const auto i = static_cast<std::size_t>(it->gaussian);
        const Projected2D& p = *proj[i];
        const double a = it->alpha;
        const double before = it->weight / a;  // transmittance reaching this Gaussian

        g.color[i] += gc * it->weight;
        grad_dist[i] += gd * it->weight;

        const Vec3 dC_da = before * map[i].color - behind_color / (1.0 - a);
        const double dD_da = before * p.depth_along_ray - behind_depth / (1.0 - a);
        const double g_alpha = gc.dot(dC_da) + gd * dD_da;

        behind_color += map[i].color * it->weight;
        behind_depth += p.depth_along_ray * it->weight;

        if (a >= kAlphaMax) continue;  // clamped: no gradient to opacity or mean
        const Vec2 delta = Vec2(x, y) - p.mean2d;
        const double gauss = a / map[i].opacity;
        g.opacity[i] += g_alpha * gauss;
        grad_mean[i] += g_alpha * a * (conic[i] * delta);
      }
    }

    const Mat3 wmat = obs.pose.world_to_camera();
    for (std::size_t i = 0; i < map.size(); ++i) {
      if (!proj[i]) continue;
      const Vec3 offset = map[i].position - obs.pose.position;
      const Vec3 t = wmat * offset;
      const double iz = 1.0 / t.z();
      Eigen::Matrix<double, 2, 3> jac;
      jac << k.fx * iz, 0.0, -k.fx * t.x() * iz * iz,  //
          0.0, k.fy * iz, -k.fy * t.y() * iz * iz;
      g.position[i] += (jac * wmat).transpose() * grad_mean[i];
      g.position[i] += grad_dist[i] * offset / offset.norm();
    }
  }
  return g;
}

inline double map_loss(const GaussianMap& map, std::span<const Observation> keyframes, const CameraIntrinsics& k,
                        const LossWeights& w) {
  double loss = 0.0;
  for (const auto& obs : keyframes) {
    const auto r = rasterize(map, obs.pose, k);
    const Image l = loss_image(r, obs, w.lambda_c, w.depth_scale);
    double s = 0.0;
    for (double v : l.data) s += v;
    loss += s / static_cast<double>(l.pixel_count());
  }
  return keyframes.empty() ? 0.0 : loss / static_cast<double>(keyframes.size());
}

struct OptimizeStats {
  std::vector<double> losses;  // mean loss at the start of each iteration
  double final_loss = 0.0;
  std::size_t pruned = 0;
};

struct OptimizerSettings {
  double position_lr_scale = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam steps on color, opacity and position; prunes near-transparent Gaussians afterwards.
inline OptimizeStats optimize_step(GaussianMap& map, std::span<const Observation> keyframes,
                                   const CameraIntrinsics& k, int iters, double lr, const LossWeights& w = {},
                                   const OptimizerSettings& s = {}) {
  if (keyframes.empty()) throw Error("optimize_step: at least one keyframe is required");
  OptimizeStats stats;
  if (iters <= 0) {
    stats.final_loss = map_loss(map, keyframes, k, w);
    stats.losses.push_back(stats.final_loss);
    return stats;
  }

  const std::size_t n = map.size();
  std::vector<Eigen::Matrix<double, 7, 1>> m(n, Eigen::Matrix<double, 7, 1>::Zero());
  std::vector<Eigen::Matrix<double, 7, 1>> v(n, Eigen::Matrix<double, 7, 1>::Zero());
  double b1t = 1.0, b2t = 1.0;

  for (int it = 0; it < iters; ++it) {
    const MapGradients g = loss_and_gradients(map, keyframes, k, w);
    stats.losses.push_back(g.loss);
    b1t *= s.beta1;
    b2t *= s.beta2;
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::Matrix<double, 7, 1> grad;
      grad << g.color[i], g.opacity[i], g.position[i];
      m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * grad;
      v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * grad.cwiseAbs2();
      const Eigen::Matrix<double, 7, 1> step =
          ((m[i] / (1.0 - b1t)).array() / ((v[i] / (1.0 - b2t)).cwiseSqrt().array() + s.eps)).matrix();
      Gaussian& gs = map[i];
      gs.color = (gs.color - lr * step.head<3>()).cwiseMax(0.0).cwiseMin(1.0);
      gs.opacity = std::clamp(gs.opacity - lr * step[3], kOpacityMin, kOpacityMax);
      gs.position -= lr * s.position_lr_scale * step.tail<3>();
    }
  }

  const auto before = map.size();
  std::erase_if(map, [](const Gaussian& gs) { return gs.opacity < kPruneOpacity; });
  stats.pruned = before - map.size();
  stats.final_loss = map_loss(map, keyframes, k, w);
  return stats;
}

}  // namespace gaussmi
