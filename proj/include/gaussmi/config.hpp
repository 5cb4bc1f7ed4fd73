#pragma once

#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gaussmi/types.hpp"

namespace gaussmi {

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline double parse_double(std::string_view text, const std::string& what) {
  const std::string t = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v))
    throw ParseError(what + ": expected a finite number, got '" + t + "'");
  return v;
}

inline std::vector<double> parse_list(std::string_view text, const std::string& what) {
  std::vector<double> out;
  std::string item;
  std::stringstream ss{std::string(text)};
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_double(item, what));
  }
  return out;
}

inline Vec3 parse_vec3(std::string_view text, const std::string& what) {
  const auto v = parse_list(text, what);
  if (v.size() != 3) throw ParseError(what + ": expected 3 comma-separated values");
  return {v[0], v[1], v[2]};
}

inline bool parse_bool(std::string_view text, const std::string& what) {
  const std::string t = trim(text);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  throw ParseError(what + ": expected true/false, got '" + t + "'");
}

inline int parse_int(std::string_view text, const std::string& what) {
  const double v = parse_double(text, what);
  if (v != std::floor(v)) throw ParseError(what + ": expected an integer");
  return static_cast<int>(v);
}

/// Splits `key = value` lines; '#' starts a comment. Returns (line number, key, value).
struct KeyValueLine {
  int line;
  std::string key;
  std::string value;
};

inline std::vector<KeyValueLine> read_key_values(std::istream& in, const std::string& source) {
  std::vector<KeyValueLine> out;
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    out.push_back({lineno, trim(line.substr(0, eq)), trim(line.substr(eq + 1))});
  }
  return out;
}

}  // namespace detail

/// Parses a flat `key = value` config. Missing keys keep their defaults, unknown keys are errors.
inline SystemConfig parse_config(std::istream& in, const std::string& source = "<config>") {
  SystemConfig cfg;
  int width = cfg.camera.width, height = cfg.camera.height;
  double fov = 90.0, near = cfg.camera.near, far = cfg.camera.far;

  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto num = [](double& dst) -> Setter {
    return [&dst](const std::string& v, const std::string& w) { dst = detail::parse_double(v, w); };
  };
  auto integer = [](int& dst) -> Setter {
    return [&dst](const std::string& v, const std::string& w) { dst = detail::parse_int(v, w); };
  };
  auto list = [](std::vector<double>& dst) -> Setter {
    return [&dst](const std::string& v, const std::string& w) { dst = detail::parse_list(v, w); };
  };
  auto vec3 = [](Vec3& dst) -> Setter {
    return [&dst](const std::string& v, const std::string& w) { dst = detail::parse_vec3(v, w); };
  };

  const std::map<std::string, Setter, std::less<>> setters{
      {"lambda_L", num(cfg.lambda_L)},
      {"lambda_T", num(cfg.lambda_T)},
      {"lambda_c", num(cfg.lambda_c)},
      {"depth_scale", num(cfg.depth_scale)},
      {"T", num(cfg.T)},
      {"w_I", num(cfg.w_I)},
      {"w_J", num(cfg.w_J)},
      {"tau", num(cfg.tau)},
      {"phi", num(cfg.phi)},
      {"V_xy", list(cfg.V_xy)},
      {"V_z", list(cfg.V_z)},
      {"Omega_z", list(cfg.Omega_z)},
      {"snap_cost_integral",
       [&](const std::string& v, const std::string& w) { cfg.snap_cost_integral = detail::parse_bool(v, w); }},
      {"clearance_radius", num(cfg.clearance_radius)},
      {"workspace_min", vec3(cfg.workspace_min)},
      {"workspace_max", vec3(cfg.workspace_max)},
      {"noise_model",
       [&](const std::string& v, const std::string& w) {
         if (v == "uniform")
           cfg.noise.kind = NoiseKind::uniform;
         else if (v == "poissonian_gaussian")
           cfg.noise.kind = NoiseKind::poissonian_gaussian;
         else
           throw ParseError(w + ": unknown noise model '" + v + "'");
       }},
      {"noise_a", num(cfg.noise.a)},
      {"noise_b", num(cfg.noise.b)},
      {"image_width", integer(width)},
      {"image_height", integer(height)},
      {"fov_deg", num(fov)},
      {"near", num(near)},
      {"far", num(far)},
      {"opt_iters", integer(cfg.opt_iters)},
      {"opt_lr", num(cfg.opt_lr)},
      {"opt_keyframes", integer(cfg.opt_keyframes)},
      {"keyframe_cap", integer(cfg.keyframe_cap)},
      {"spawn_stride", integer(cfg.spawn_stride)},
      {"init_opacity", num(cfg.init_opacity)},
      {"heldout_views", integer(cfg.heldout_views)},
  };

  for (const auto& kv : detail::read_key_values(in, source)) {
    const std::string where = source + ":" + std::to_string(kv.line) + ": " + kv.key;
    auto it = setters.find(kv.key);
    if (it == setters.end()) throw ParseError(where + ": unknown config key");
    it->second(kv.value, where);
  }
  if (!(fov > 0.0 && fov < 180.0)) throw ParseError(source + ": fov_deg must lie in (0,180)");
  cfg.camera = CameraIntrinsics::from_fov(width, height, fov, near, far);
  for (const auto* set : {&cfg.V_xy, &cfg.V_z, &cfg.Omega_z})
    if (set->empty()) throw ParseError(source + ": action sample sets must be non-empty");
  try {
    cfg.validate();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(source + ": " + e.what());
  }
  return cfg;
}

inline SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

}  // namespace gaussmi
