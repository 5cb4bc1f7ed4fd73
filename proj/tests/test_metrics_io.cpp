#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "gaussmi/gaussmi.hpp"

using namespace gaussmi;

namespace {

std::string tmp(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("gaussmi_" + name)).string();
}

Image random_image(std::mt19937_64& rng, int w, int h, int c) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(w, h, c);
  for (auto& v : img.data) v = u(rng);
  return img;
}

// MAE after removing the top-k entries of `order` (independent of the library sort).
double mae_after_removing(const std::vector<double>& err, const std::vector<std::size_t>& order, std::size_t k) {
  double s = 0.0;
  for (std::size_t i = k; i < order.size(); ++i) s += err[order[i]];
  return s / static_cast<double>(order.size() - k);
}

}  // namespace

TEST(Psnr, Cases) {
  Image a(4, 4, 3, 0.3);
  EXPECT_EQ(psnr(a, a), 100.0);
  Image b = a;
  for (auto& v : b.data) v += 0.1;
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-9);
  Image z(4, 4, 3, 0.0), o(4, 4, 3, 1.0);
  EXPECT_NEAR(psnr(z, o), 0.0, 1e-12);
  EXPECT_THROW(psnr(a, Image(5, 4, 3)), Error);
}

TEST(Ssim, Cases) {
  std::mt19937_64 rng(1);
  const Image a = random_image(rng, 24, 20, 3);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
  Image neg = a;
  for (auto& v : neg.data) v = 1.0 - v;
  EXPECT_LT(ssim(a, neg), 1.0);
  EXPECT_LT(ssim(a, neg), 0.0);
  EXPECT_THROW(ssim(a, Image(24, 21, 3)), Error);
}

TEST(Ssim, ConstantPatches) {
  // For constant images SSIM reduces to the luminance term (2 mu_x mu_y + C1) / (mu_x^2 + mu_y^2 + C1).
  const double c1 = 0.01 * 0.01;
  const double mu = 0.4;
  double prev = -1.0;
  for (double off : {0.2, 0.1, 0.05, 0.01, 0.001}) {
    const Image x(16, 16, 1, mu), y(16, 16, 1, mu + off);
    const double s = ssim(x, y);
    const double ref = (2 * mu * (mu + off) + c1) / (mu * mu + (mu + off) * (mu + off) + c1);
    EXPECT_NEAR(s, ref, 1e-9);
    EXPECT_GT(s, prev);
    prev = s;
  }
  EXPECT_GT(prev, 0.99999);
}

TEST(Efficiency, Cases) {
  EXPECT_NEAR(efficiency(34.35, 141, std::exp(1.0)), 6.94, 0.01);
  EXPECT_NEAR(efficiency(34.35, 141), 15.98, 0.01);
  EXPECT_EQ(efficiency(0.0, 50), 0.0);
  EXPECT_LT(efficiency(30.0, 100), efficiency(30.0, 50));
  EXPECT_THROW(efficiency(30.0, 1), Error);
  EXPECT_THROW(efficiency(30.0, 0), Error);
}

TEST(Sparsification, PerfectUncertainty) {
  std::mt19937_64 rng(2);
  const Image err = random_image(rng, 10, 10, 1);
  const auto c = sparsification(err, err, 50);
  EXPECT_LT(ause(c), 1e-12);
  EXPECT_EQ(c.mae.front(), c.oracle_mae.front());
  for (std::size_t k = 1; k < c.oracle_mae.size(); ++k) EXPECT_LE(c.oracle_mae[k], c.oracle_mae[k - 1] + 1e-15);
}

TEST(Sparsification, ConstantUncertaintyRemovesByIndex) {
  Image err(4, 1, 1);
  err.data = {4.0, 3.0, 2.0, 1.0};
  const Image flat(4, 1, 1, 0.5);
  const auto c = sparsification(err, flat, 4);
  ASSERT_EQ(c.fractions.size(), 4u);
  EXPECT_DOUBLE_EQ(c.mae[0], 2.5);
  EXPECT_DOUBLE_EQ(c.mae[1], 2.0);  // pixel 0 removed first
  EXPECT_DOUBLE_EQ(c.mae[2], 1.5);
  EXPECT_DOUBLE_EQ(c.mae[3], 1.0);
}

TEST(Sparsification, AntiCorrelatedIsWorstRanking) {
  // Exhaustive over every ranking of 4x4 images with distinct errors is 16! orderings;
  // instead enumerate every ranking of a 4-pixel subset while the other 12 follow the
  // anti-correlated order, plus random rankings, and check none beats -error.
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    Image err = random_image(rng, 4, 4, 1);
    Image anti = err;
    for (auto& v : anti.data) v = -v;
    const double worst = ause(sparsification(err, anti, 16));
    EXPECT_GT(worst, 0.0);

    std::vector<std::size_t> by_err(16);
    std::iota(by_err.begin(), by_err.end(), 0);
    std::sort(by_err.begin(), by_err.end(), [&](std::size_t a, std::size_t b) { return err[a] < err[b]; });
    // Permute the four lowest-error pixels (removed first by the anti ranking) in all 24 orders.
    std::vector<std::size_t> head(by_err.begin(), by_err.begin() + 4);
    std::sort(head.begin(), head.end());
    do {
      Image u(4, 4, 1);
      for (std::size_t r = 0; r < 16; ++r) u[by_err[r]] = -static_cast<double>(r);
      for (std::size_t r = 0; r < 4; ++r) u[head[r]] = 100.0 - static_cast<double>(r);
      EXPECT_LE(ause(sparsification(err, u, 16)), worst + 1e-12);
    } while (std::next_permutation(head.begin(), head.end()));

    for (int n = 0; n < 200; ++n) {
      const Image u = random_image(rng, 4, 4, 1);
      EXPECT_LE(ause(sparsification(err, u, 16)), worst + 1e-12);
    }
  }
}

TEST(Sparsification, MatchesDirectRemoval) {
  std::mt19937_64 rng(4);
  const Image err = random_image(rng, 7, 5, 1);
  const Image unc = random_image(rng, 7, 5, 1);
  const auto c = sparsification(err, unc, 10);
  std::vector<std::size_t> order(err.data.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return unc[a] > unc[b]; });
  for (std::size_t k = 0; k < c.fractions.size(); ++k) {
    const auto removed = static_cast<std::size_t>(std::floor(c.fractions[k] * 35.0));
    EXPECT_NEAR(c.mae[k], mae_after_removing(err.data, order, removed), 1e-12);
  }
}

TEST(Sparsification, NormalizedAuseInUnitInterval) {
  std::mt19937_64 rng(5);
  for (int n = 0; n < 20; ++n) {
    const Image err = random_image(rng, 12, 9, 1);
    const Image unc = random_image(rng, 12, 9, 1);
    const double a = ause(sparsification(err, unc));
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
}

TEST(ImageIo, PpmBytes) {
  const std::string path = tmp("white.ppm");
  write_ppm(Image(1, 1, 3, 1.0), path);
  std::ifstream in(path, std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(bytes, std::string("P6\n1 1\n255\n\xFF\xFF\xFF", 14));
  const Image back = read_ppm(path);
  EXPECT_EQ(back.width, 1);
  EXPECT_EQ(back.data, (std::vector<double>{1.0, 1.0, 1.0}));
  std::remove(path.c_str());
}

TEST(ImageIo, PfmRoundTrip) {
  std::mt19937_64 rng(6);
  Image d = random_image(rng, 7, 3, 1);
  for (auto& v : d.data) v = static_cast<float>(v * 10.0);
  const std::string path = tmp("depth.pfm");
  write_pfm(d, path);
  const Image back = read_pfm(path);
  ASSERT_EQ(back.width, 7);
  ASSERT_EQ(back.height, 3);
  EXPECT_EQ(back.data, d.data);
  std::remove(path.c_str());
}

TEST(ImageIo, CsvRows) {
  const std::string path = tmp("log.csv");
  write_csv(path, {"a", "b"}, {{1.0, 2.5}, {3.0, 4.0}, {5.0, 0.125}});
  std::ifstream in(path);
  int lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  EXPECT_EQ(lines, 4);
  std::vector<std::string> header;
  const auto rows = read_csv(path, &header);
  EXPECT_EQ(header, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(rows.back(), (std::vector<double>{5.0, 0.125}));
  std::remove(path.c_str());
}

TEST(ImageIo, MissingFileNamesPath) {
  try {
    read_pfm("/nonexistent/dir/x.pfm");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/x.pfm"), std::string::npos);
  }
}
