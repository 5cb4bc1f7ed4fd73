#include <gtest/gtest.h>

#include <random>

#include "gaussmi/gaussmi.hpp"
#include "oracles.hpp"

using namespace gaussmi;

namespace {

const Viewpoint kOrigin = Viewpoint::at(Vec3::Zero(), 0.0);

}  // namespace

TEST(InfoGain, Full) {
  for (double o : {1e-3, 0.5, 1.0, 7.0, 1e3}) EXPECT_EQ(info_gain_full(1.0, o), 0.0);
  EXPECT_NEAR(info_gain_full(1e12, 1.0), std::log(2.0), 1e-9);
  EXPECT_NEAR(info_gain_full(2.0, 1.0), (1.0 / 1.5) * std::log(2.0 / 1.5), 1e-12);
  EXPECT_NEAR(info_gain_full(2.0, 1.0), 0.19179, 1e-5);
}

TEST(InfoGain, FullApproachesExpected) {
  // First-order gap at delta^-1 = e: (e / o) * (1 - log P). It drops below 1e-9 only once o > ~8e-3.
  const double e = 1e-12;
  for (int i = 0; i <= 60; ++i) {
    const double o = std::pow(10.0, -3.0 + 0.1 * i);
    const double p = o / (1.0 + o);
    const double gap = info_gain_expected(p) - info_gain_full(1.0 / e, o);
    const double first_order = e / o * (1.0 - std::log(p));
    EXPECT_NEAR(gap, first_order, 1e-3 * first_order + 1e-15) << o;
    if (o >= 1e-2) {
      EXPECT_LT(std::abs(gap), 1e-9) << o;
    }
  }
}

TEST(InfoGain, Expected) {
  EXPECT_NEAR(info_gain_expected(0.5), std::log(2.0), 1e-15);
  EXPECT_NEAR(info_gain_expected(1.0 - 1e-15), 0.0, 1e-14);
  EXPECT_NEAR(info_gain_expected(1.0 / (std::exp(1.0) + 1.0)), std::log(std::exp(1.0) + 1.0), 1e-12);
  EXPECT_NEAR(std::log(std::exp(1.0) + 1.0), 1.3133, 1e-4);
}

TEST(InfoGain, FromLogOddsIsStable) {
  for (double l = -30.0; l <= 30.0; l += 0.5) {
    const double direct = -std::log(sigmoid(l));
    EXPECT_NEAR(info_gain_from_logodds(l), direct, 1e-12 * std::max(1.0, direct)) << l;
    EXPECT_GE(info_gain_from_logodds(l), 0.0);
  }
}

TEST(Luminance, Coefficients) {
  EXPECT_NEAR(luminance(Vec3::Ones()), 255.0, 1e-12);
  EXPECT_EQ(luminance(Vec3::Zero()), 0.0);
  EXPECT_NEAR(luminance(Vec3(1, 0, 0)), 76.245, 1e-12);
}

TEST(MeasurementPrior, Cases) {
  SensorNoiseModel uni;
  uni.kind = NoiseKind::uniform;
  for (double m : {0.0, 100.0, 255.0}) EXPECT_EQ(measurement_prior(m, uni), 1.0);
  SensorNoiseModel flat;
  flat.a = 0.0;
  for (double m : {0.0, 100.0, 255.0}) EXPECT_EQ(measurement_prior(m, flat), 1.0);
  const SensorNoiseModel pg;
  EXPECT_NEAR(measurement_prior(255.0, pg), std::sqrt(0.0001) / std::sqrt(0.0101), 1e-12);
  EXPECT_NEAR(measurement_prior(255.0, pg), 0.0995, 1e-4);
}

TEST(GaussMi, EmptyMapAndInvisible) {
  const auto k = oracle::small_camera();
  EXPECT_EQ(evaluate_gauss_mi({}, kOrigin, k, {}).total_mi, 0.0);
  Gaussian behind;
  behind.position = {-3, 0, 0};
  EXPECT_EQ(evaluate_gauss_mi({behind}, kOrigin, k, {}).total_mi, 0.0);
}

TEST(GaussMi, FourPixelHandExample) {
  // A small splat centered between four pixel centers, opacity at the clamp, uniform prior.
  const auto k = CameraIntrinsics::from_fov(2, 2, 90.0);
  Gaussian g;
  g.position = {1.0, 0.0, 0.0};
  g.scales = Vec3::Constant(1e-4);  // footprint set by the 0.3 px^2 regularization
  g.opacity = kOpacityMax;
  SensorNoiseModel uni;
  uni.kind = NoiseKind::uniform;
  const auto res = evaluate_gauss_mi({g}, kOrigin, k, uni);
  // Each pixel is 0.5 px from the mean in both axes: alpha ~ opacity * exp(-0.5 * 0.5 / 0.3).
  const double alpha = g.opacity * std::exp(-0.5 * 0.5 / 0.3);
  const auto p = project_gaussian(g, kOrigin, k);
  ASSERT_TRUE(p);
  const Vec2 d(0.5, 0.5);
  const double exact = std::min(kAlphaMax, g.opacity * std::exp(-0.5 * d.dot(p->cov2d.inverse() * d)));
  EXPECT_NEAR(alpha, exact, 1e-6);
  EXPECT_NEAR(res.total_mi, 4.0 * exact * std::log(2.0), 1e-12);
  EXPECT_EQ(res.contributions, 4u);
}

TEST(GaussMi, FourPixelsAtTheAlphaClamp) {
  // A wide splat over a 2x2 image saturates alpha at 0.99 on every pixel.
  const auto k = CameraIntrinsics::from_fov(2, 2, 90.0);
  Gaussian g;
  g.position = {1.0, 0.0, 0.0};
  g.scales = Vec3::Constant(5.0);
  g.opacity = kOpacityMax;
  SensorNoiseModel uni;
  uni.kind = NoiseKind::uniform;
  const auto res = evaluate_gauss_mi({g}, kOrigin, k, uni);
  EXPECT_NEAR(res.total_mi, 4.0 * 0.99 * std::log(2.0), 1e-12);
  EXPECT_NEAR(res.total_mi, 2.7448, 1e-4);
}

TEST(GaussMi, SaturatedMapIsNearZero) {
  std::mt19937_64 rng(3);
  const auto k = oracle::small_camera();
  auto m = oracle::random_scene(rng);
  for (auto& g : m) g.logodds = {kLogOddsClamp, kLogOddsClamp, kLogOddsClamp, kLogOddsClamp};
  const auto res = evaluate_gauss_mi(m, kOrigin, k, {});
  EXPECT_LE(res.total_mi, 2e-8 * static_cast<double>(k.pixel_count()));
}

TEST(GaussMi, MatchesDoubleLoopOracle) {
  std::mt19937_64 rng(123);
  for (int s = 0; s < 50; ++s) {
    const auto m = oracle::random_scene(rng);
    const auto k = oracle::small_camera(1 + static_cast<int>(rng() % 8), 1 + static_cast<int>(rng() % 8));
    SensorNoiseModel model;
    if (s % 3 == 0) model.kind = NoiseKind::uniform;
    std::vector<double> per_pixel;
    const double ref = oracle::brute_force_mi(m, kOrigin, k, model, &per_pixel);
    const auto res = evaluate_gauss_mi(m, kOrigin, k, model);
    EXPECT_NEAR(res.total_mi, ref, 1e-9) << s;
    for (std::size_t j = 0; j < per_pixel.size(); ++j) EXPECT_NEAR(res.mi_image[j], per_pixel[j], 1e-9);
  }
}

TEST(GaussMi, TotalIsSumOfImage) {
  std::mt19937_64 rng(99);
  const auto k = oracle::small_camera(16, 12);
  for (int s = 0; s < 10; ++s) {
    const auto m = oracle::random_scene(rng, 30);
    const auto res = evaluate_gauss_mi(m, kOrigin, k, {});
    double sum = 0.0;
    for (double v : res.mi_image.data) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(res.total_mi, sum, 1e-9);
    EXPECT_GE(res.total_mi, 0.0);
  }
}

TEST(GaussMi, UsesBucketOfQueryView) {
  const auto k = oracle::small_camera(4, 4);
  Gaussian g;
  g.position = {2.0, 0.0, 0.0};
  g.scales = Vec3::Constant(0.5);
  g.logodds = {0.0, 0.0, kLogOddsClamp, 0.0};  // reliable only from the -x side
  const double from_minus_x = evaluate_gauss_mi({g}, kOrigin, k, {}).total_mi;
  const double from_plus_x = evaluate_gauss_mi({g}, Viewpoint::at(Vec3(4, 0, 0), kPi), k, {}).total_mi;
  EXPECT_LT(from_minus_x, 1e-6);
  EXPECT_GT(from_plus_x, 0.1);
}
