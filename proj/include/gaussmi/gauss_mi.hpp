#pragma once

// Expected Shannon mutual information between the map's reliability variables and a
// hypothetical observation from a candidate view. All quantities are in nats.

#include <cmath>
#include <vector>

#include "gaussmi/belief.hpp"
#include "gaussmi/renderer.hpp"
#include "gaussmi/types.hpp"

namespace gaussmi {

/// Information gain f(delta, o) = o / (o + 1/delta) * log((o + 1) / (o + 1/delta)).
inline double info_gain_full(double delta, double odds) {
  const double inv = 1.0 / delta;
  return odds / (odds + inv) * std::log((odds + 1.0) / (odds + inv));
}

/// Zero-loss limit of info_gain_full: -log P.
inline double info_gain_expected(double probability) { return -std::log(probability); }

/// -log(sigmoid(l)) without cancellation for large l.
inline double info_gain_from_logodds(double l) { return l > 0.0 ? std::log1p(std::exp(-l)) : -l + std::log1p(std::exp(l)); }

/// Luminance on the 0..255 scale.
inline double luminance(const Vec3& rgb) { return 255.0 * (0.299 * rgb.x() + 0.587 * rgb.y() + 0.114 * rgb.z()); }

/// P(z | M): inverse noise standard deviation at luminance M, normalized to 1 at M = 0.
inline double measurement_prior(double lum, const SensorNoiseModel& model) {
  if (model.kind == NoiseKind::uniform) return 1.0;
  return std::sqrt(model.b / (model.a * (lum / 255.0) + model.b));
}

struct MIResult {
  double total_mi = 0.0;
  Image mi_image;
  std::size_t gaussians_touched = 0;
  std::size_t contributions = 0;  // visited (Gaussian, pixel) pairs
};

/// Per-Gaussian expected information gain for the bucket a view would probe.
inline std::vector<double> view_info_gains(const GaussianMap& map, const Viewpoint& view) {
  std::vector<double> f(map.size());
  for (std::size_t i = 0; i < map.size(); ++i)
    f[i] = info_gain_from_logodds(map[i].logodds[static_cast<std::size_t>(direction_bucket(view, map[i]))]);
  return f;
}

inline MIResult evaluate_gauss_mi(const GaussianMap& map, const Viewpoint& view, const CameraIntrinsics& k,
                                  const SensorNoiseModel& model) {
  MIResult res;
  res.mi_image = Image(k.width, k.height, 1);
  if (map.empty()) return res;

  const auto f = view_info_gains(map, view);
  const RenderOutput r = rasterize(map, view, k, f);
  std::vector<std::uint8_t> touched(map.size(), 0);
  for (const auto& c : r.contribs) touched[static_cast<std::size_t>(c.gaussian)] = 1;
  res.contributions = r.contribs.size();
  for (auto t : touched) res.gaussians_touched += t;

  for (std::size_t j = 0; j < r.pixel_count(); ++j) {
    const Vec3 c(r.color[3 * j], r.color[3 * j + 1], r.color[3 * j + 2]);
    res.mi_image[j] = measurement_prior(luminance(c), model) * (*r.scalar)[j];
    res.total_mi += res.mi_image[j];
  }
  return res;
}

}  // namespace gaussmi
