#pragma once

// Procedural ground-truth scenes and the simulated RGB-D sensor.

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "gaussmi/config.hpp"
#include "gaussmi/gauss_mi.hpp"
#include "gaussmi/map_io.hpp"
#include "gaussmi/planner.hpp"
#include "gaussmi/renderer.hpp"

namespace gaussmi {

struct GroundTruthScene {
  GaussianMap gaussians;
  Vec3 workspace_min = Vec3::Constant(-3.5);
  Vec3 workspace_max = Vec3::Constant(3.5);
  Viewpoint start;

  /// Bounding-box diagonal of the Gaussian centers.
  double extent() const {
    if (gaussians.empty()) return 1.0;
    Vec3 lo = gaussians.front().position, hi = lo;
    for (const auto& g : gaussians) {
      lo = lo.cwiseMin(g.position);
      hi = hi.cwiseMax(g.position);
    }
    return std::max(1e-3, (hi - lo).norm());
  }

  Vec3 center() const {
    Vec3 c = Vec3::Zero();
    for (const auto& g : gaussians) c += g.position;
    return gaussians.empty() ? c : Vec3(c / static_cast<double>(gaussians.size()));
  }
};

constexpr double kValidDepthOpacity = 0.95;

/// Renders the ground truth at `pose`. Depth is invalid (0) wherever the accumulated
/// opacity is below 0.95. With `noise`, adds luminance-dependent Gaussian color noise.
inline Observation groundtruth_observe(const GroundTruthScene& scene, const Viewpoint& pose, const CameraIntrinsics& k,
                                       const SensorNoiseModel* noise = nullptr, std::uint64_t seed = 0) {
  const RenderOutput r = rasterize(scene.gaussians, pose, k);
  Observation obs;
  obs.pose = pose;
  obs.color = r.color;
  obs.depth = r.depth;
  for (std::size_t j = 0; j < obs.depth.pixel_count(); ++j)
    if (1.0 - r.residual_T[j] < kValidDepthOpacity) obs.depth[j] = 0.0;
  if (noise) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (std::size_t j = 0; j < obs.color.pixel_count(); ++j) {
      const Vec3 c(r.color[3 * j], r.color[3 * j + 1], r.color[3 * j + 2]);
      const double sigma = noise->sigma(luminance(c));
      for (int ch = 0; ch < 3; ++ch) obs.color[3 * j + ch] = std::clamp(c[ch] + sigma * n01(rng), 0.0, 1.0);
    }
  }
  return obs;
}

namespace detail {

inline Quat normal_to_rotation(const Vec3& normal) {
  return Quat::FromTwoVectors(Vec3::UnitZ(), normal.normalized());
}

inline Vec3 hsv(double h, double s, double v) {
  h = std::fmod(std::fmod(h, 1.0) + 1.0, 1.0) * 6.0;
  const int i = static_cast<int>(h) % 6;
  const double f = h - std::floor(h), p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (i) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

/// Checker texture whose hue depends on the surface patch id.
inline Vec3 texture(int patch, double u, double v) {
  const int cu = static_cast<int>(std::floor(u * 4.0)), cv = static_cast<int>(std::floor(v * 4.0));
  const bool odd = ((cu + cv) & 1) != 0;
  const double hue = 0.13 * patch + 0.05 * u;
  return hsv(hue, odd ? 0.85 : 0.35, odd ? 0.9 : 0.55 + 0.3 * v);
}

inline Gaussian surfel(const Vec3& p, const Vec3& normal, double spacing, const Vec3& color) {
  Gaussian g;
  g.position = p;
  g.rotation = normal_to_rotation(normal);
  g.scales = {0.6 * spacing, 0.6 * spacing, 0.15 * spacing};
  g.color = color.cwiseMax(0.0).cwiseMin(1.0);
  g.opacity = 0.95;
  return g;
}

/// Box shell (four sides and top) centered at `c` with edge lengths `size`.
inline void add_box(GaussianMap& out, const Vec3& c, const Vec3& size, int cells, int patch0) {
  const Vec3 h = 0.5 * size;
  struct Face {
    Vec3 normal, u_axis, v_axis;
    double u_len, v_len;
  };
  const Face faces[] = {
      {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ(), size.y(), size.z()},
      {Vec3::UnitY(), -Vec3::UnitX(), Vec3::UnitZ(), size.x(), size.z()},
      {-Vec3::UnitX(), -Vec3::UnitY(), Vec3::UnitZ(), size.y(), size.z()},
      {-Vec3::UnitY(), Vec3::UnitX(), Vec3::UnitZ(), size.x(), size.z()},
      {Vec3::UnitZ(), Vec3::UnitX(), Vec3::UnitY(), size.x(), size.y()},
  };
  int patch = patch0;
  for (const auto& f : faces) {
    const Vec3 origin = c + f.normal.cwiseProduct(h);
    const int nu = f.normal.z() != 0.0 ? std::max(2, cells * 3 / 4) : cells;
    const double spacing = std::max(f.u_len, f.v_len) / nu;
    for (int a = 0; a < nu; ++a)
      for (int b = 0; b < nu; ++b) {
        const double u = (a + 0.5) / nu, v = (b + 0.5) / nu;
        const Vec3 p = origin + (u - 0.5) * f.u_len * f.u_axis + (v - 0.5) * f.v_len * f.v_axis;
        out.push_back(surfel(p, f.normal, spacing, texture(patch, u, v)));
      }
    ++patch;
  }
}

inline void add_cylinder(GaussianMap& out, const Vec3& c, double radius, double height, int around, int rows) {
  const double spacing = std::max(2 * kPi * radius / around, height / rows);
  for (int a = 0; a < around; ++a) {
    const double th = 2 * kPi * (a + 0.5) / around;
    const Vec3 n(std::cos(th), std::sin(th), 0.0);
    for (int b = 0; b < rows; ++b) {
      const double v = (b + 0.5) / rows;
      const Vec3 p = c + radius * n + Vec3(0, 0, (v - 0.5) * height);
      out.push_back(surfel(p, n, spacing, texture(a * 4 / around, std::fmod(th / (kPi / 2), 1.0), v)));
    }
  }
  const int rings = std::max(2, rows / 3);
  for (int r = 0; r < rings; ++r) {
    const double rr = radius * (r + 0.5) / rings;
    const int n = std::max(4, static_cast<int>(around * (r + 0.5) / rings));
    for (int a = 0; a < n; ++a) {
      const double th = 2 * kPi * (a + 0.5) / n;
      const Vec3 p = c + Vec3(rr * std::cos(th), rr * std::sin(th), 0.5 * height);
      out.push_back(surfel(p, Vec3::UnitZ(), spacing, texture(5, rr / radius, th / (2 * kPi))));
    }
  }
}

}  // namespace detail

/// Procedural toy scenes: "box", "cylinder" or "twin" (two boxes). Each has at most
/// 500 ground-truth Gaussians and a start pose 1.6 m out on +x looking at the origin.
inline GroundTruthScene make_toy_scene(const std::string& kind) {
  GroundTruthScene s;
  if (kind == "box") {
    detail::add_box(s.gaussians, Vec3::Zero(), Vec3(1.0, 1.0, 1.0), 10, 0);
  } else if (kind == "cylinder") {
    detail::add_cylinder(s.gaussians, Vec3::Zero(), 0.5, 1.0, 32, 11);
  } else if (kind == "twin") {
    detail::add_box(s.gaussians, Vec3(0.0, -0.5, 0.0), Vec3(0.6, 0.6, 1.0), 7, 0);
    detail::add_box(s.gaussians, Vec3(0.0, 0.5, 0.0), Vec3(0.6, 0.6, 1.0), 7, 3);
  } else {
    throw Error("unknown toy scene '" + kind + "' (expected box, cylinder or twin)");
  }
  s.workspace_min = Vec3(-3.5, -3.5, -0.6);
  s.workspace_max = Vec3(3.5, 3.5, 0.6);
  s.start = Viewpoint::at(Vec3(1.6, 0.0, 0.0), kPi);
  return s;
}

/// Held-out evaluation views on a horizontal ring through the start pose around the
/// scene center, offset half a step from the start bearing.
inline std::vector<Viewpoint> heldout_views(const GroundTruthScene& s, int count) {
  std::vector<Viewpoint> out;
  const Vec3 c = s.center();
  const Vec3 d0 = s.start.position - c;
  const double radius = std::hypot(d0.x(), d0.y());
  const double base = std::atan2(d0.y(), d0.x());
  for (int i = 0; i < count; ++i) {
    const double th = base + 2 * kPi * (i + 0.5) / count;
    const Vec3 p(c.x() + radius * std::cos(th), c.y() + radius * std::sin(th), s.start.position.z());
    out.push_back(Viewpoint::at(p, th + kPi));
  }
  return out;
}

/// Scene sidecar: `map = <ply path relative to the sidecar>`, `workspace_min`,
/// `workspace_max` and `start_pose = x,y,z,yaw`.
inline void save_scene(const GroundTruthScene& s, const std::string& sidecar_path) {
  namespace fs = std::filesystem;
  const fs::path side(sidecar_path);
  const fs::path ply = side.parent_path() / (side.stem().string() + ".ply");
  save_map(s.gaussians, ply.string());
  std::ofstream out(sidecar_path);
  if (!out) throw Error("cannot open '" + sidecar_path + "' for writing");
  out.precision(17);
  out << "map = " << ply.filename().string() << "\n";
  out << "workspace_min = " << s.workspace_min.x() << "," << s.workspace_min.y() << "," << s.workspace_min.z() << "\n";
  out << "workspace_max = " << s.workspace_max.x() << "," << s.workspace_max.y() << "," << s.workspace_max.z() << "\n";
  out << "start_pose = " << s.start.position.x() << "," << s.start.position.y() << "," << s.start.position.z() << ","
      << s.start.yaw << "\n";
  if (!out) throw Error("failed writing '" + sidecar_path + "'");
}

inline Viewpoint parse_pose(const std::string& text, const std::string& what = "pose") {
  const auto v = detail::parse_list(text, what);
  if (v.size() != 4) throw ParseError(what + ": expected x,y,z,yaw");
  return Viewpoint::at(Vec3(v[0], v[1], v[2]), v[3]);
}

inline GroundTruthScene load_scene(const std::string& sidecar_path) {
  namespace fs = std::filesystem;
  std::ifstream in(sidecar_path);
  if (!in) throw Error("cannot open scene file '" + sidecar_path + "'");
  GroundTruthScene s;
  std::string map_path;
  bool have_ws_min = false, have_ws_max = false, have_start = false;
  for (const auto& kv : detail::read_key_values(in, sidecar_path)) {
    const std::string where = sidecar_path + ":" + std::to_string(kv.line) + ": " + kv.key;
    if (kv.key == "map") {
      map_path = kv.value;
    } else if (kv.key == "workspace_min") {
      s.workspace_min = detail::parse_vec3(kv.value, where);
      have_ws_min = true;
    } else if (kv.key == "workspace_max") {
      s.workspace_max = detail::parse_vec3(kv.value, where);
      have_ws_max = true;
    } else if (kv.key == "start_pose") {
      s.start = parse_pose(kv.value, where);
      have_start = true;
    } else {
      throw ParseError(where + ": unknown scene key");
    }
  }
  if (map_path.empty() || !have_ws_min || !have_ws_max || !have_start)
    throw ParseError(sidecar_path + ": scene requires map, workspace_min, workspace_max and start_pose");
  fs::path mp(map_path);
  if (mp.is_relative()) mp = fs::path(sidecar_path).parent_path() / mp;
  s.gaussians = load_map(mp.string());
  if (!(s.workspace_min.array() < s.workspace_max.array()).all())
    throw ParseError(sidecar_path + ": workspace box is empty");
  return s;
}

}  // namespace gaussmi
