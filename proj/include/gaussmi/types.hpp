#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace gaussmi {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised on malformed map, config, image or scene files.
class ParseError : public Error {
 public:
  using Error::Error;
};

constexpr double kPi = std::numbers::pi;
constexpr int kNumDirections = 4;
constexpr double kLogOddsClamp = 20.0;
constexpr double kOpacityMin = 1e-4;
constexpr double kOpacityMax = 1.0 - 1e-4;

inline double sigmoid(double l) { return 1.0 / (1.0 + std::exp(-l)); }

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

/// One anisotropic splat with its four-direction reliability belief.
struct Gaussian {
  Vec3 position = Vec3::Zero();
  Quat rotation = Quat::Identity();
  Vec3 scales = Vec3::Constant(0.01);  // per-axis standard deviations
  Vec3 color = Vec3::Zero();
  double opacity = 0.5;
  std::array<double, kNumDirections> logodds{0.0, 0.0, 0.0, 0.0};

  /// World-frame covariance R diag(s^2) R^T.
  Mat3 covariance() const {
    const Mat3 r = rotation.normalized().toRotationMatrix();
    return r * scales.cwiseAbs2().asDiagonal() * r.transpose();
  }

  double reliability(int bucket) const { return sigmoid(logodds[static_cast<std::size_t>(bucket)]); }

  bool operator==(const Gaussian& o) const {
    return position == o.position && rotation.coeffs() == o.rotation.coeffs() && scales == o.scales &&
           color == o.color && opacity == o.opacity && logodds == o.logodds;
  }
};

using GaussianMap = std::vector<Gaussian>;

/// Throws if `g` violates the Gaussian invariants.
inline void validate(const Gaussian& g) {
  auto finite3 = [](const Vec3& v) { return v.allFinite(); };
  if (!finite3(g.position) || !finite3(g.scales) || !finite3(g.color) || !g.rotation.coeffs().allFinite() ||
      !std::isfinite(g.opacity))
    throw Error("gaussian has non-finite fields");
  if (!(g.opacity > 0.0 && g.opacity < 1.0)) throw Error("opacity out of range");
  if (!(g.scales.array() > 0.0).all()) throw Error("scales must be strictly positive");
  for (double l : g.logodds)
    if (!std::isfinite(l)) throw Error("logodds must be finite");
}

/// Flat-output camera pose (x, y, z, yaw) with derivatives.
struct Viewpoint {
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;
  Vec3 velocity = Vec3::Zero();
  Vec3 acceleration = Vec3::Zero();
  Vec3 jerk = Vec3::Zero();
  double yaw_rate = 0.0;

  static Viewpoint at(const Vec3& p, double yaw) {
    Viewpoint v;
    v.position = p;
    v.yaw = wrap_angle(yaw);
    return v;
  }

  /// Body x axis (camera optical axis).
  Vec3 forward() const { return {std::cos(yaw), std::sin(yaw), 0.0}; }

  /// Rows are the camera x (right), y (down), z (forward) axes in world coordinates.
  Mat3 world_to_camera() const {
    const double c = std::cos(yaw), s = std::sin(yaw);
    Mat3 r;
    r << s, -c, 0.0,  //
        0.0, 0.0, -1.0, //
        c, s, 0.0;
    return r;
  }
};

/// Pinhole intrinsics. Pixel (u, v) has its center at coordinate (u, v).
struct CameraIntrinsics {
  int width = 640;
  int height = 480;
  double fx = 320.0;
  double fy = 320.0;
  double cx = 319.5;
  double cy = 239.5;
  double near = 0.05;
  double far = 100.0;

  static CameraIntrinsics from_fov(int width, int height, double hfov_deg, double near = 0.05, double far = 100.0) {
    CameraIntrinsics k;
    k.width = width;
    k.height = height;
    k.fx = 0.5 * width / std::tan(0.5 * hfov_deg * kPi / 180.0);
    k.fy = k.fx;
    k.cx = 0.5 * (width - 1);
    k.cy = 0.5 * (height - 1);
    k.near = near;
    k.far = far;
    return k;
  }

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }

  void validate() const {
    if (width <= 0 || height <= 0) throw Error("image dimensions must be positive");
    if (!(fx > 0.0 && fy > 0.0)) throw Error("focal lengths must be positive");
    if (!(near > 0.0 && near < far)) throw Error("require 0 < near < far");
  }
};

/// Dense row-major image with interleaved channels.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  bool same_shape(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }

  double& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
};

/// A ground-truth RGB-D capture. Depth is range along the pixel ray; 0 marks invalid.
struct Observation {
  Image color;  // 3 channels in [0,1]
  Image depth;  // 1 channel, meters
  Viewpoint pose;
};

enum class NoiseKind { uniform, poissonian_gaussian };

/// Luminance-dependent sensor noise: variance = a * (M/255) + b in normalized intensity units.
struct SensorNoiseModel {
  NoiseKind kind = NoiseKind::poissonian_gaussian;
  double a = 0.01;
  double b = 0.0001;

  /// Noise standard deviation at luminance M (0..255), in normalized intensity units.
  double sigma(double luminance) const {
    return kind == NoiseKind::uniform ? std::sqrt(b) : std::sqrt(a * (luminance / 255.0) + b);
  }

  void validate() const {
    if (kind == NoiseKind::poissonian_gaussian && !(a >= 0.0 && b > 0.0))
      throw Error("poissonian_gaussian noise requires a >= 0 and b > 0");
  }
};

/// All tunables of the reconstruction system.
struct SystemConfig {
  // inverse sensor model and loss
  double lambda_L = 1.7;
  double lambda_T = 7.0;
  double lambda_c = 0.9;
  double depth_scale = 0.0;  // 0 selects the scene bounding-box diagonal
  // planner
  double T = 1.6;
  double w_I = 0.03;
  double w_J = 0.01;
  std::vector<double> V_xy{-0.5, -0.25, 0.0, 0.25, 0.5};
  std::vector<double> V_z{-0.3, 0.0, 0.3};
  std::vector<double> Omega_z{-kPi / 4, -kPi / 8, 0.0, kPi / 8, kPi / 4};
  bool snap_cost_integral = false;
  double clearance_radius = 0.3;
  Vec3 workspace_min = Vec3::Constant(-10.0);
  Vec3 workspace_max = Vec3::Constant(10.0);
  // termination
  double tau = 0.7;
  double phi = 0.75;
  // sensor
  SensorNoiseModel noise;
  CameraIntrinsics camera = CameraIntrinsics::from_fov(640, 480, 90.0);
  // mapping
  int opt_iters = 10;
  double opt_lr = 0.01;
  int opt_keyframes = 8;
  int keyframe_cap = 200;
  int spawn_stride = 2;
  double init_opacity = 0.6;
  int heldout_views = 8;

  void validate() const {
    if (!(lambda_L > 0.0 && lambda_T > 0.0)) throw Error("lambda_L and lambda_T must be positive");
    if (!(lambda_c >= 0.0 && lambda_c <= 1.0)) throw Error("lambda_c must lie in [0,1]");
    if (!(depth_scale >= 0.0)) throw Error("depth_scale must be non-negative");
    if (!(tau > 0.0 && tau < 1.0)) throw Error("tau must lie in (0,1)");
    if (!(phi > 0.0 && phi < 1.0)) throw Error("phi must lie in (0,1)");
    if (!(T > 0.0)) throw Error("primitive duration T must be positive");
    if (!(clearance_radius >= 0.0)) throw Error("clearance_radius must be non-negative");
    if (!(workspace_min.array() < workspace_max.array()).all()) throw Error("workspace box is empty");
    if (spawn_stride < 1) throw Error("spawn_stride must be >= 1");
    if (!(init_opacity > 0.0 && init_opacity < 1.0)) throw Error("init_opacity must lie in (0,1)");
    noise.validate();
    camera.validate();
  }
};

}  // namespace gaussmi
