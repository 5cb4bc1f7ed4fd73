#pragma once

// Forward Gaussian-splat rasterization with per-contribution transmittance weights.
//
// All visible Gaussians are sorted front-to-back by ray distance once per view and
// composited in that order; every (Gaussian, pixel) weight T_i = alpha_i * prod_{n<i}(1 - alpha_n)
// is recorded so belief updates and MI can reuse the exact blending weights.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "gaussmi/types.hpp"

namespace gaussmi {

constexpr double kCovRegularization = 0.3;  // px^2 added to the 2D covariance diagonal
constexpr double kAlphaMax = 0.99;
constexpr double kAlphaMin = 1.0 / 255.0;
constexpr double kTransmittanceStop = 1e-4;
constexpr double kFootprintSigmas = 3.0;
constexpr double kFrustumGuard = 1.3;

struct Projected2D {
  Vec2 mean2d = Vec2::Zero();
  Mat2 cov2d = Mat2::Identity();
  double depth_along_ray = 0.0;
  int gaussian_index = -1;
  double radius = 0.0;  // footprint half-width in pixels
};

/// First-order (EWA) projection of a Gaussian. Empty when in front of the near plane,
/// beyond the far plane, or when the footprint misses every pixel center.
inline std::optional<Projected2D> project_gaussian(const Gaussian& g, const Viewpoint& view,
                                                   const CameraIntrinsics& k, int index = -1) {
  const Mat3 w = view.world_to_camera();
  const Vec3 offset = g.position - view.position;
  const Vec3 t = w * offset;
  if (t.z() < k.near) return std::nullopt;
  const double dist = offset.norm();
  if (dist > k.far) return std::nullopt;

  const double iz = 1.0 / t.z();
  // The Jacobian is taken at a point clamped to a slightly widened frustum so
  // off-screen Gaussians near the camera do not blow up.
  const double limx = kFrustumGuard * 0.5 * k.width / k.fx, limy = kFrustumGuard * 0.5 * k.height / k.fy;
  const double tx = std::clamp(t.x() * iz, -limx, limx) * t.z();
  const double ty = std::clamp(t.y() * iz, -limy, limy) * t.z();
  Eigen::Matrix<double, 2, 3> jac;
  jac << k.fx * iz, 0.0, -k.fx * tx * iz * iz,  //
      0.0, k.fy * iz, -k.fy * ty * iz * iz;
  const Eigen::Matrix<double, 2, 3> jw = jac * w;

  Projected2D p;
  p.mean2d = {k.fx * t.x() * iz + k.cx, k.fy * t.y() * iz + k.cy};
  p.cov2d = jw * g.covariance() * jw.transpose();
  p.cov2d = 0.5 * (p.cov2d + p.cov2d.transpose());
  p.cov2d.diagonal().array() += kCovRegularization;
  p.depth_along_ray = dist;
  p.gaussian_index = index;

  const double mid = 0.5 * p.cov2d.trace();
  const double lambda_max = mid + std::sqrt(std::max(0.1, mid * mid - p.cov2d.determinant()));
  p.radius = kFootprintSigmas * std::sqrt(lambda_max);
  if (p.mean2d.x() + p.radius < 0.0 || p.mean2d.x() - p.radius > k.width - 1 || p.mean2d.y() + p.radius < 0.0 ||
      p.mean2d.y() - p.radius > k.height - 1)
    return std::nullopt;
  return p;
}

/// Effective alpha of a projected Gaussian at pixel center `px`; 0 when culled.
inline double splat_alpha(const Projected2D& p, const Mat2& conic, double opacity, const Vec2& px) {
  const Vec2 d = px - p.mean2d;
  if (std::abs(d.x()) > p.radius || std::abs(d.y()) > p.radius) return 0.0;
  const double power = -0.5 * d.dot(conic * d);
  if (power > 0.0) return 0.0;
  const double alpha = std::min(kAlphaMax, opacity * std::exp(power));
  return alpha < kAlphaMin ? 0.0 : alpha;
}

struct Contribution {
  int gaussian = -1;
  double weight = 0.0;  // cumulative transmittance T_i
  double alpha = 0.0;
};

struct RenderOutput {
  Image color;       // 3 channels
  Image depth;       // range-weighted depth D
  Image residual_T;  // transmittance left after the last contributor
  std::vector<std::size_t> offsets;  // CSR offsets into contribs, size = pixels + 1
  std::vector<Contribution> contribs;
  std::optional<Image> scalar;  // filled when a per-Gaussian scalar was supplied
  std::size_t visible_gaussians = 0;

  std::span<const Contribution> pixel(std::size_t j) const {
    return {contribs.data() + offsets[j], offsets[j + 1] - offsets[j]};
  }
  std::size_t pixel_count() const { return offsets.empty() ? 0 : offsets.size() - 1; }
};

/// Composites a per-Gaussian scalar with the recorded weights: out_j = sum_i s_i T_i.
inline Image composite_scalar(const RenderOutput& r, std::span<const double> per_gaussian) {
  Image out(r.color.width, r.color.height, 1);
  for (std::size_t j = 0; j < r.pixel_count(); ++j) {
    double acc = 0.0;
    for (const auto& c : r.pixel(j)) acc += per_gaussian[static_cast<std::size_t>(c.gaussian)] * c.weight;
    out[j] = acc;
  }
  return out;
}

/// Projects every Gaussian and returns the visible ones sorted front to back
/// (ties broken by index).
inline std::vector<Projected2D> project_and_sort(const GaussianMap& map, const Viewpoint& view,
                                                 const CameraIntrinsics& k) {
  std::vector<Projected2D> vis;
  vis.reserve(map.size());
  for (std::size_t i = 0; i < map.size(); ++i)
    if (auto p = project_gaussian(map[i], view, k, static_cast<int>(i))) vis.push_back(*p);
  std::sort(vis.begin(), vis.end(), [](const Projected2D& a, const Projected2D& b) {
    if (a.depth_along_ray != b.depth_along_ray) return a.depth_along_ray < b.depth_along_ray;
    return a.gaussian_index < b.gaussian_index;
  });
  return vis;
}

inline RenderOutput rasterize(const GaussianMap& map, const Viewpoint& view, const CameraIntrinsics& k,
                              std::span<const double> per_gaussian_scalar = {}) {
  if (!per_gaussian_scalar.empty() && per_gaussian_scalar.size() != map.size())
    throw Error("rasterize: per-Gaussian scalar size does not match map size");

  const std::size_t npix = k.pixel_count();
  RenderOutput out;
  out.color = Image(k.width, k.height, 3);
  out.depth = Image(k.width, k.height, 1);
  out.residual_T = Image(k.width, k.height, 1, 1.0);

  const auto vis = project_and_sort(map, view, k);
  out.visible_gaussians = vis.size();

  struct Triplet {
    std::uint32_t pixel;
    Contribution c;
  };
  std::vector<Triplet> trip;
  std::vector<std::uint8_t> done(npix, 0);
  std::vector<std::size_t> counts(npix, 0);

  for (const auto& p : vis) {
    const Gaussian& g = map[static_cast<std::size_t>(p.gaussian_index)];
    const Mat2 conic = p.cov2d.inverse();
    const int x0 = std::max(0, static_cast<int>(std::ceil(p.mean2d.x() - p.radius)));
    const int x1 = std::min(k.width - 1, static_cast<int>(std::floor(p.mean2d.x() + p.radius)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(p.mean2d.y() - p.radius)));
    const int y1 = std::min(k.height - 1, static_cast<int>(std::floor(p.mean2d.y() + p.radius)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const std::size_t j = static_cast<std::size_t>(y) * k.width + x;
        if (done[j]) continue;
        const double alpha = splat_alpha(p, conic, g.opacity, Vec2(x, y));
        if (alpha == 0.0) continue;
        double& tpix = out.residual_T[j];
        const double w = alpha * tpix;
        for (int c = 0; c < 3; ++c) out.color[j * 3 + c] += g.color[c] * w;
        out.depth[j] += p.depth_along_ray * w;
        tpix *= (1.0 - alpha);
        trip.push_back({static_cast<std::uint32_t>(j), {p.gaussian_index, w, alpha}});
        ++counts[j];
        if (tpix < kTransmittanceStop) done[j] = 1;
      }
    }
  }

  // Stable bucket by pixel keeps each pixel's list in front-to-back order.
  out.offsets.assign(npix + 1, 0);
  for (std::size_t j = 0; j < npix; ++j) out.offsets[j + 1] = out.offsets[j] + counts[j];
  out.contribs.resize(trip.size());
  std::vector<std::size_t> cursor(out.offsets.begin(), out.offsets.end() - 1);
  for (const auto& t : trip) out.contribs[cursor[t.pixel]++] = t.c;

  if (!per_gaussian_scalar.empty()) out.scalar = composite_scalar(out, per_gaussian_scalar);
  return out;
}

}  // namespace gaussmi
