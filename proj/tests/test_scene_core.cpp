#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "gaussmi/gaussmi.hpp"
#include "oracles.hpp"

using namespace gaussmi;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("gaussmi_" + name)).string();
}

// Writes a one-record map whose float fields are given explicitly.
std::string one_record(const std::array<float, 18>& f) {
  std::ostringstream os(std::ios::binary);
  os << "ply\nformat binary_little_endian 1.0\nelement vertex 1\n";
  for (const char* p : kMapProperties) os << "property float " << p << "\n";
  os << "end_header\n";
  os.write(reinterpret_cast<const char*>(f.data()), sizeof(float) * 18);
  return os.str();
}

}  // namespace

TEST(Types, WrapAngle) {
  EXPECT_DOUBLE_EQ(wrap_angle(0.0), 0.0);
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
  EXPECT_NEAR(wrap_angle(3 * kPi / 2), -kPi / 2, 1e-12);
  EXPECT_NEAR(wrap_angle(-5 * kPi / 2), -kPi / 2, 1e-12);
}

TEST(Types, GaussianValidate) {
  Gaussian g;
  EXPECT_NO_THROW(validate(g));
  g.opacity = 1.0;
  EXPECT_THROW(validate(g), Error);
  g.opacity = 0.5;
  g.scales.x() = 0.0;
  EXPECT_THROW(validate(g), Error);
  g.scales.x() = 0.1;
  g.logodds[2] = std::nan("");
  EXPECT_THROW(validate(g), Error);
}

TEST(Types, CameraAxesAreOrthonormalAndRightHanded) {
  for (double yaw : {0.0, 0.7, -2.0, kPi}) {
    const Mat3 r = Viewpoint::at(Vec3::Zero(), yaw).world_to_camera();
    EXPECT_LT((r * r.transpose() - Mat3::Identity()).norm(), 1e-12);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
    EXPECT_LT((r.row(2).transpose() - Viewpoint::at(Vec3::Zero(), yaw).forward()).norm(), 1e-12);
  }
}

TEST(Types, IntrinsicsValidate) {
  CameraIntrinsics k;
  EXPECT_NO_THROW(k.validate());
  k.near = 0.0;
  EXPECT_THROW(k.validate(), Error);
  k = CameraIntrinsics::from_fov(64, 48, 90.0);
  EXPECT_DOUBLE_EQ(k.fx, 32.0);
  EXPECT_DOUBLE_EQ(k.cx, 31.5);
  EXPECT_DOUBLE_EQ(k.cy, 23.5);
}

TEST(MapIo, SingleGaussianAtOriginHasPriorBeliefs) {
  std::array<float, 18> f{};
  f[3] = 1.0f;  // rot_w
  f[7] = f[8] = f[9] = 0.1f;
  f[10] = 0.5f;
  std::istringstream in(one_record(f));
  const auto map = read_map(in);
  ASSERT_EQ(map.size(), 1u);
  EXPECT_EQ(map[0].position, Vec3::Zero());
  for (int b = 0; b < kNumDirections; ++b) EXPECT_DOUBLE_EQ(map[0].reliability(b), 0.5);
}

TEST(MapIo, OpacityOutOfRange) {
  std::array<float, 18> f{};
  f[3] = 1.0f;
  f[7] = f[8] = f[9] = 0.1f;
  f[10] = 1.2f;
  std::istringstream in(one_record(f));
  try {
    read_map(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("opacity out of range"), std::string::npos);
  }
}

TEST(MapIo, NonFiniteFieldNamesField) {
  std::array<float, 18> f{};
  f[3] = 1.0f;
  f[7] = f[8] = f[9] = 0.1f;
  f[10] = 0.5f;
  f[1] = std::numeric_limits<float>::infinity();
  std::istringstream in(one_record(f));
  try {
    read_map(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("'y'"), std::string::npos);
  }
}

TEST(MapIo, MalformedHeaderAndCountMismatch) {
  std::istringstream bad("ply\nformat ascii 1.0\nend_header\n");
  EXPECT_THROW(read_map(bad), ParseError);

  std::array<float, 18> f{};
  f[3] = 1.0f;
  f[7] = f[8] = f[9] = 0.1f;
  f[10] = 0.5f;
  std::string s = one_record(f);
  s.replace(s.find("element vertex 1"), 16, "element vertex 2");
  std::istringstream trunc(s);
  EXPECT_THROW(read_map(trunc), ParseError);
}

TEST(MapIo, EmptyMapHasHeaderOnly) {
  const std::string path = tmp_path("empty.ply");
  save_map({}, path);
  std::ifstream in(path, std::ios::binary);
  const std::string text((std::istreambuf_iterator<char>(in)), {});
  EXPECT_NE(text.find("element vertex 0"), std::string::npos);
  EXPECT_EQ(text.substr(text.size() - 11), "end_header\n");
  EXPECT_TRUE(load_map(path).empty());
  std::remove(path.c_str());
}

TEST(MapIo, BodySizeMatchesRecordCount) {
  const std::string path = tmp_path("two.ply");
  GaussianMap m(2);
  save_map(m, path);
  std::ifstream in(path, std::ios::binary);
  const std::string text((std::istreambuf_iterator<char>(in)), {});
  const auto body = text.size() - (text.find("end_header\n") + 11);
  EXPECT_EQ(body, 2u * 18u * sizeof(float));
  std::remove(path.c_str());
}

TEST(MapIo, RoundTripIsExactForFloatRepresentableMaps) {
  std::mt19937_64 rng(7);
  GaussianMap m = oracle::random_scene(rng, 20);
  // Quantize to float and normalize the quaternion as a saved-then-loaded map would be.
  for (auto& g : m) {
    std::ostringstream os;
    write_map(os, {g});
    std::istringstream is(os.str());
    g = read_map(is)[0];
  }
  const std::string path = tmp_path("rt.ply");
  save_map(m, path);
  const auto back = load_map(path);
  ASSERT_EQ(back.size(), m.size());
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_TRUE(back[i] == m[i]) << "record " << i;
  std::remove(path.c_str());
}

TEST(Spawn, PrincipalRay) {
  const auto k = CameraIntrinsics::from_fov(5, 5, 90.0);
  Observation obs;
  obs.pose = Viewpoint::at(Vec3(1, 2, 0.5), 0.4);
  obs.color = Image(5, 5, 3, 0.3);
  obs.depth = Image(5, 5, 1, 0.0);
  obs.depth.at(2, 2) = 3.0;
  const auto g = backproject_spawn(obs, k, 2, 0.6);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_LT((g[0].position - (obs.pose.position + 3.0 * obs.pose.forward())).norm(), 1e-12);
  EXPECT_DOUBLE_EQ(g[0].opacity, 0.6);
}

TEST(Spawn, AllInvalidDepthGivesNothing) {
  const auto k = CameraIntrinsics::from_fov(16, 12, 90.0);
  Observation obs;
  obs.color = Image(16, 12, 3, 0.5);
  obs.depth = Image(16, 12, 1, 0.0);
  EXPECT_TRUE(backproject_spawn(obs, k, 1, 0.5).empty());
}

TEST(Spawn, CountMatchesStrideGrid) {
  const CameraIntrinsics k = CameraIntrinsics::from_fov(640, 480, 90.0);
  Observation obs;
  obs.color = Image(640, 480, 3, 0.5);
  obs.depth = Image(640, 480, 1, 2.0);
  const auto all = backproject_spawn(obs, k, 8, 0.6);
  EXPECT_EQ(all.size(), 80u * 60u);
  for (const auto& g : all) EXPECT_NO_THROW(validate(g));

  obs.depth.at(0, 0) = 0.0;  // sampled pixel
  obs.depth.at(1, 0) = 0.0;  // skipped by the stride
  EXPECT_EQ(backproject_spawn(obs, k, 8, 0.6).size(), 80u * 60u - 1);
}
