#pragma once

// Per-Gaussian reliability belief: inverse sensor model, log-odds Bayes update into
// world-frame direction buckets, and the termination statistic.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gaussmi/loss.hpp"
#include "gaussmi/renderer.hpp"
#include "gaussmi/types.hpp"

namespace gaussmi {

constexpr double kLossFloor = 1e-6;

/// P(r | Z) = 1 / ((lambda_L L)^(lambda_T T) + 1).
inline double inverse_sensor_probability(double transmittance, double loss, double lambda_L, double lambda_T) {
  const double base = lambda_L * std::max(loss, kLossFloor);
  return 1.0 / (std::pow(base, lambda_T * transmittance) + 1.0);
}

/// Log of the inverse-sensor odds ratio: log delta = -lambda_T T log(lambda_L L).
inline double inverse_sensor_logodds(double transmittance, double loss, double lambda_L, double lambda_T) {
  return -lambda_T * transmittance * std::log(lambda_L * std::max(loss, kLossFloor));
}

/// World-frame horizontal quadrant of the bearing from the Gaussian to the camera.
/// Bucket 0 is centered on +x, 1 on +y, 2 on -x, 3 on -y.
inline int direction_bucket(const Viewpoint& view, const Vec3& gaussian_position) {
  const double dx = view.position.x() - gaussian_position.x();
  const double dy = view.position.y() - gaussian_position.y();
  const double bearing = (std::hypot(dx, dy) < 1e-12) ? view.yaw : std::atan2(dy, dx);
  double a = std::fmod(bearing + kPi / 4.0, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return std::min(3, static_cast<int>(std::floor(a / (kPi / 2.0))));
}

inline int direction_bucket(const Viewpoint& view, const Gaussian& g) { return direction_bucket(view, g.position); }

/// Mean of the four bucket probabilities.
inline double mean_reliability(const Gaussian& g) {
  double s = 0.0;
  for (double l : g.logodds) s += sigmoid(l);
  return s / kNumDirections;
}

inline double done_fraction(const GaussianMap& map, double tau) {
  if (map.empty()) return 0.0;
  const auto n = std::count_if(map.begin(), map.end(), [tau](const Gaussian& g) { return mean_reliability(g) > tau; });
  return static_cast<double>(n) / static_cast<double>(map.size());
}

inline bool terminated(const GaussianMap& map, const SystemConfig& cfg) {
  return !map.empty() && done_fraction(map, cfg.tau) > cfg.phi;
}

struct BeliefUpdateReport {
  std::size_t updated_count = 0;
  double mean_abs_delta_logodds = 0.0;
  double loss_mean = 0.0;
};

/// Per-Gaussian log-odds increments of one observation, given its render and loss image.
inline std::vector<double> logodds_deltas(const RenderOutput& render, const Image& loss, std::size_t map_size,
                                          double lambda_L, double lambda_T) {
  std::vector<double> delta(map_size, 0.0);
  for (std::size_t j = 0; j < render.pixel_count(); ++j) {
    const double log_base = std::log(lambda_L * std::max(loss[j], kLossFloor));
    for (const auto& c : render.pixel(j))
      delta[static_cast<std::size_t>(c.gaussian)] -= lambda_T * c.weight * log_base;
  }
  return delta;
}

/// Renders the map from the observation pose, builds the loss image and adds each
/// Gaussian's accumulated log-odds increment to the bucket facing the camera.
inline BeliefUpdateReport update_probabilities(GaussianMap& map, const Observation& obs, const CameraIntrinsics& k,
                                               const SystemConfig& cfg) {
  BeliefUpdateReport report;
  const RenderOutput render = rasterize(map, obs.pose, k);
  const Image loss = loss_image(render, obs, cfg.lambda_c, cfg.depth_scale);
  report.loss_mean =
      loss.pixel_count() ? std::accumulate(loss.data.begin(), loss.data.end(), 0.0) / loss.pixel_count() : 0.0;

  std::vector<std::uint8_t> touched(map.size(), 0);
  for (const auto& c : render.contribs) touched[static_cast<std::size_t>(c.gaussian)] = 1;
  const auto delta = logodds_deltas(render, loss, map.size(), cfg.lambda_L, cfg.lambda_T);

  double abs_sum = 0.0;
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (!touched[i]) continue;
    auto& l = map[i].logodds[static_cast<std::size_t>(direction_bucket(obs.pose, map[i]))];
    const double before = l;
    l = std::clamp(l + delta[i], -kLogOddsClamp, kLogOddsClamp);
    abs_sum += std::abs(l - before);
    ++report.updated_count;
  }
  report.mean_abs_delta_logodds = report.updated_count ? abs_sum / report.updated_count : 0.0;
  return report;
}

}  // namespace gaussmi
