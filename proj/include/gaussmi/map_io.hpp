#pragma once

// PLY-compatible Gaussian map persistence: ASCII header, binary little-endian float32 body.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "gaussmi/types.hpp"

namespace gaussmi {

inline constexpr std::array<const char*, 18> kMapProperties{
    "x",       "y",       "z",       "rot_w",   "rot_x",     "rot_y",     "rot_z",     "scale_0",   "scale_1",
    "scale_2", "opacity", "red",     "green",   "blue",      "logodds_0", "logodds_1", "logodds_2", "logodds_3"};

namespace detail {

static_assert(std::endian::native == std::endian::little, "map I/O assumes a little-endian host");

inline std::array<float, 18> pack(const Gaussian& g) {
  return {static_cast<float>(g.position.x()),   static_cast<float>(g.position.y()),
          static_cast<float>(g.position.z()),   static_cast<float>(g.rotation.w()),
          static_cast<float>(g.rotation.x()),   static_cast<float>(g.rotation.y()),
          static_cast<float>(g.rotation.z()),   static_cast<float>(g.scales.x()),
          static_cast<float>(g.scales.y()),     static_cast<float>(g.scales.z()),
          static_cast<float>(g.opacity),        static_cast<float>(g.color.x()),
          static_cast<float>(g.color.y()),      static_cast<float>(g.color.z()),
          static_cast<float>(g.logodds[0]),     static_cast<float>(g.logodds[1]),
          static_cast<float>(g.logodds[2]),     static_cast<float>(g.logodds[3])};
}

inline Gaussian unpack(const std::array<float, 18>& f, std::size_t record) {
  const std::string where = "record " + std::to_string(record);
  for (std::size_t k = 0; k < f.size(); ++k)
    if (!std::isfinite(f[k])) throw ParseError(where + ": field '" + kMapProperties[k] + "' is not finite");

  Gaussian g;
  g.position = {f[0], f[1], f[2]};
  Quat q(f[3], f[4], f[5], f[6]);
  if (q.norm() < 1e-12) throw ParseError(where + ": rotation quaternion has zero norm");
  g.rotation = q.normalized();
  g.scales = {f[7], f[8], f[9]};
  if (!(g.scales.array() > 0.0).all()) throw ParseError(where + ": scale must be strictly positive");
  const double opacity = f[10];
  if (!(opacity > 0.0 && opacity < 1.0)) throw ParseError(where + ": field 'opacity': opacity out of range");
  g.opacity = std::clamp(opacity, kOpacityMin, kOpacityMax);
  g.color = {f[11], f[12], f[13]};
  for (int b = 0; b < kNumDirections; ++b)
    g.logodds[static_cast<std::size_t>(b)] = std::clamp<double>(f[14 + b], -kLogOddsClamp, kLogOddsClamp);
  return g;
}

}  // namespace detail

inline void write_map(std::ostream& out, const GaussianMap& map) {
  out << "ply\nformat binary_little_endian 1.0\nelement vertex " << map.size() << "\n";
  for (const char* name : kMapProperties) out << "property float " << name << "\n";
  out << "end_header\n";
  for (const auto& g : map) {
    const auto rec = detail::pack(g);
    out.write(reinterpret_cast<const char*>(rec.data()), sizeof(float) * rec.size());
  }
  if (!out) throw Error("failed writing map stream");
}

inline GaussianMap read_map(std::istream& in, const std::string& source = "<map>") {
  std::string line;
  int lineno = 0;
  auto next_line = [&]() -> std::string& {
    if (!std::getline(in, line)) throw ParseError(source + ": unexpected end of header at line " + std::to_string(lineno + 1));
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };
  auto fail = [&](const std::string& msg) -> ParseError {
    return ParseError(source + ":" + std::to_string(lineno) + ": " + msg);
  };

  if (next_line() != "ply") throw fail("missing 'ply' magic");
  if (next_line() != "format binary_little_endian 1.0") throw fail("expected 'format binary_little_endian 1.0'");

  std::size_t count = 0;
  bool have_element = false;
  std::size_t prop = 0;
  while (next_line() != "end_header") {
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "comment" || kw.empty()) continue;
    if (kw == "element") {
      std::string name;
      long long n = -1;
      ls >> name >> n;
      if (have_element || name != "vertex" || n < 0 || !ls) throw fail("expected single 'element vertex <count>'");
      count = static_cast<std::size_t>(n);
      have_element = true;
    } else if (kw == "property") {
      std::string type, name;
      ls >> type >> name;
      if (!have_element) throw fail("property before element declaration");
      if (prop >= kMapProperties.size()) throw fail("field count mismatch: too many properties");
      if (type != "float" && type != "float32") throw fail("field '" + name + "' must be float32");
      if (name != kMapProperties[prop])
        throw fail("field '" + name + "' where '" + kMapProperties[prop] + "' was expected");
      ++prop;
    } else {
      throw fail("unexpected header keyword '" + kw + "'");
    }
  }
  if (!have_element) throw fail("missing 'element vertex' declaration");
  if (prop != kMapProperties.size())
    throw fail("field count mismatch: " + std::to_string(prop) + " properties, expected " +
               std::to_string(kMapProperties.size()));

  GaussianMap map;
  map.reserve(count);
  std::array<float, 18> rec{};
  for (std::size_t i = 0; i < count; ++i) {
    in.read(reinterpret_cast<char*>(rec.data()), sizeof(float) * rec.size());
    if (in.gcount() != static_cast<std::streamsize>(sizeof(float) * rec.size()))
      throw ParseError(source + ": body truncated at record " + std::to_string(i) + " of " + std::to_string(count));
    map.push_back(detail::unpack(rec, i));
  }
  return map;
}

inline GaussianMap load_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open map file '" + path + "'");
  return read_map(in, path);
}

inline void save_map(const GaussianMap& map, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_map(out, map);
  out.flush();
  if (!out) throw Error("failed writing map file '" + path + "'");
}

}  // namespace gaussmi
