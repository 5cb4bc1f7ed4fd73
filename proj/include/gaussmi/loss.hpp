#pragma once

#include <cmath>

#include "gaussmi/renderer.hpp"
#include "gaussmi/types.hpp"

namespace gaussmi {

/// Weights of the color/depth loss.
struct LossWeights {
  double lambda_c = 0.9;
  double depth_scale = 5.0;
};

/// Per-pixel loss L = lambda_c * mean|C - C_obs| + (1 - lambda_c) * |D - D_obs| / depth_scale.
/// Pixels without a valid observed depth use the color term alone.
struct PixelLoss {
  double value = 0.0;
  Vec3 d_color = Vec3::Zero();  // dL/dC
  double d_depth = 0.0;         // dL/dD
};

inline double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

inline PixelLoss pixel_loss(const Vec3& rendered, double rendered_depth, const Vec3& observed, double observed_depth,
                            const LossWeights& w) {
  PixelLoss out;
  const Vec3 dc = rendered - observed;
  const double color_term = dc.cwiseAbs().sum() / 3.0;
  const bool depth_valid = observed_depth > 0.0;
  const double wc = depth_valid ? w.lambda_c : 1.0;
  out.value = wc * color_term;
  for (int c = 0; c < 3; ++c) out.d_color[c] = wc * sgn(dc[c]) / 3.0;
  if (depth_valid) {
    const double dd = rendered_depth - observed_depth;
    out.value += (1.0 - w.lambda_c) * std::abs(dd) / w.depth_scale;
    out.d_depth = (1.0 - w.lambda_c) * sgn(dd) / w.depth_scale;
  }
  return out;
}

/// Loss image between a render and an observation.
inline Image loss_image(const RenderOutput& render, const Observation& obs, double lambda_c, double depth_scale) {
  if (!render.color.same_shape(obs.color) || render.depth.width != obs.depth.width ||
      render.depth.height != obs.depth.height)
    throw Error("loss_image: render and observation dimensions differ");
  if (!(depth_scale > 0.0)) throw Error("loss_image: depth_scale must be positive");
  const LossWeights w{lambda_c, depth_scale};
  Image out(render.color.width, render.color.height, 1);
  for (std::size_t j = 0; j < out.pixel_count(); ++j) {
    const Vec3 c(render.color[3 * j], render.color[3 * j + 1], render.color[3 * j + 2]);
    const Vec3 o(obs.color[3 * j], obs.color[3 * j + 1], obs.color[3 * j + 2]);
    out[j] = pixel_loss(c, render.depth[j], o, obs.depth[j], w).value;
  }
  return out;
}

}  // namespace gaussmi
