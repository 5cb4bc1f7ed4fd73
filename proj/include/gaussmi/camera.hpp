#pragma once

#include <algorithm>
#include <optional>

#include "gaussmi/types.hpp"

namespace gaussmi {

/// Unit-length world-frame ray through the center of pixel (u, v).
inline Vec3 pixel_ray(const Viewpoint& view, const CameraIntrinsics& k, double u, double v) {
  const Vec3 cam((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
  return view.world_to_camera().transpose() * cam.normalized();
}

/// Pinhole projection of a world point; empty when the point is not in front of the near plane.
inline std::optional<Vec2> project_point(const Viewpoint& view, const CameraIntrinsics& k, const Vec3& p) {
  const Vec3 t = view.world_to_camera() * (p - view.position);
  if (t.z() < k.near) return std::nullopt;
  return Vec2(k.fx * t.x() / t.z() + k.cx, k.fy * t.y() / t.z() + k.cy);
}

/// One Gaussian per valid-depth pixel on a `stride` grid, placed at the backprojected range.
inline GaussianMap backproject_spawn(const Observation& obs, const CameraIntrinsics& k, int stride,
                                     double init_opacity) {
  if (stride < 1) throw Error("backproject_spawn: stride must be >= 1");
  if (!(init_opacity > 0.0 && init_opacity < 1.0)) throw Error("backproject_spawn: init_opacity must lie in (0,1)");
  if (obs.depth.width != k.width || obs.depth.height != k.height || obs.color.width != k.width ||
      obs.color.height != k.height || obs.color.channels != 3)
    throw Error("backproject_spawn: observation does not match intrinsics");

  const Mat3 cam_to_world = obs.pose.world_to_camera().transpose();
  const double opacity = std::clamp(init_opacity, kOpacityMin, kOpacityMax);
  GaussianMap out;
  for (int v = 0; v < k.height; v += stride) {
    for (int u = 0; u < k.width; u += stride) {
      const double d = obs.depth.at(u, v);
      if (!(d > 0.0) || !std::isfinite(d)) continue;
      const Vec3 ray = cam_to_world * Vec3((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0).normalized();
      Gaussian g;
      g.position = obs.pose.position + d * ray;
      g.scales = Vec3::Constant(stride * d / k.fx);
      g.color = {obs.color.at(u, v, 0), obs.color.at(u, v, 1), obs.color.at(u, v, 2)};
      g.color = g.color.cwiseMax(0.0).cwiseMin(1.0);
      g.opacity = opacity;
      out.push_back(g);
    }
  }
  return out;
}

}  // namespace gaussmi
