#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gaussmi/types.hpp"

namespace gaussmi {

constexpr double kPsnrCap = 100.0;

inline void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) throw Error(std::string(what) + ": image dimensions differ");
}

inline double mse(const Image& a, const Image& b) {
  require_same_shape(a, b, "mse");
  if (a.data.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    s += d * d;
  }
  return s / static_cast<double>(a.data.size());
}

/// Peak signal-to-noise ratio for images in [0,1], capped at 100 dB.
inline double psnr(const Image& a, const Image& b) {
  require_same_shape(a, b, "psnr");
  const double m = mse(a, b);
  if (m < 1e-10) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / m));
}

/// Single-channel luminance (0..1) of a 1- or 3-channel image.
inline Image luminance_image(const Image& img) {
  if (img.channels == 1) return img;
  if (img.channels != 3) throw Error("luminance_image: expected 1 or 3 channels");
  Image out(img.width, img.height, 1);
  for (std::size_t j = 0; j < out.pixel_count(); ++j)
    out[j] = 0.299 * img[3 * j] + 0.587 * img[3 * j + 1] + 0.114 * img[3 * j + 2];
  return out;
}

/// Mean SSIM on the luminance channel with an 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03 and unit dynamic range. Windows are truncated and renormalized
/// at the image border.
inline double ssim(const Image& a, const Image& b) {
  require_same_shape(a, b, "ssim");
  const Image x = luminance_image(a), y = luminance_image(b);
  constexpr int kRadius = 5;
  constexpr double kSigma = 1.5;
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double kernel[2 * kRadius + 1];
  for (int i = -kRadius; i <= kRadius; ++i) kernel[i + kRadius] = std::exp(-0.5 * i * i / (kSigma * kSigma));

  const int w = x.width, h = x.height;
  if (w == 0 || h == 0) return 1.0;
  double total = 0.0;
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      double sw = 0, mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (int dy = -kRadius; dy <= kRadius; ++dy) {
        const int yy = py + dy;
        if (yy < 0 || yy >= h) continue;
        for (int dx = -kRadius; dx <= kRadius; ++dx) {
          const int xx = px + dx;
          if (xx < 0 || xx >= w) continue;
          const double k = kernel[dy + kRadius] * kernel[dx + kRadius];
          const double u = x.at(xx, yy), v = y.at(xx, yy);
          sw += k;
          mx += k * u;
          my += k * v;
          sxx += k * u * u;
          syy += k * v * v;
          sxy += k * u * v;
        }
      }
      mx /= sw;
      my /= sw;
      const double vx = std::max(0.0, sxx / sw - mx * mx);
      const double vy = std::max(0.0, syy / sw - my * my);
      const double cxy = sxy / sw - mx * my;
      total += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
  }
  return total / (static_cast<double>(w) * h);
}

/// E = PSNR / log_base(N_f).
inline double efficiency(double psnr_db, int n_frames, double log_base = 10.0) {
  if (n_frames < 2) throw Error("efficiency: need at least 2 frames");
  if (!(log_base > 1.0)) throw Error("efficiency: log base must exceed 1");
  return psnr_db / (std::log(static_cast<double>(n_frames)) / std::log(log_base));
}

struct SparsificationCurve {
  std::vector<double> fractions;
  std::vector<double> mae;
  std::vector<double> oracle_mae;
};

namespace detail {

/// MAE of the pixels left after removing the top floor(f * N) pixels by `key` (descending,
/// ties by ascending pixel index).
inline std::vector<double> remaining_mae(const std::vector<double>& error, const std::vector<double>& key,
                                         const std::vector<double>& fractions) {
  const std::size_t n = error.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });
  std::vector<double> removed_sum(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) removed_sum[i + 1] = removed_sum[i] + error[order[i]];
  std::vector<double> out;
  out.reserve(fractions.size());
  for (double f : fractions) {
    const auto removed = std::min(n - 1, static_cast<std::size_t>(std::floor(f * static_cast<double>(n))));
    out.push_back((removed_sum[n] - removed_sum[removed]) / static_cast<double>(n - removed));
  }
  return out;
}

}  // namespace detail

/// Sparsification curves over fractions k / grid_steps, k = 0 .. grid_steps-1.
inline SparsificationCurve sparsification(const Image& error, const Image& uncertainty, int grid_steps = 100) {
  if (error.width != uncertainty.width || error.height != uncertainty.height || error.channels != 1 ||
      uncertainty.channels != 1)
    throw Error("sparsification: error and uncertainty must be matching single-channel images");
  if (grid_steps < 1) throw Error("sparsification: grid_steps must be >= 1");
  if (error.data.empty()) throw Error("sparsification: empty image");
  SparsificationCurve c;
  for (int k = 0; k < grid_steps; ++k) c.fractions.push_back(static_cast<double>(k) / grid_steps);
  c.mae = detail::remaining_mae(error.data, uncertainty.data, c.fractions);
  c.oracle_mae = detail::remaining_mae(error.data, error.data, c.fractions);
  return c;
}

/// Area between the two curves, each normalized by its fraction-0 MAE (trapezoidal rule).
inline double ause(const SparsificationCurve& c) {
  if (c.fractions.size() < 2) return 0.0;
  const double norm = c.mae.front() > 0.0 ? 1.0 / c.mae.front() : 0.0;
  double area = 0.0;
  for (std::size_t k = 1; k < c.fractions.size(); ++k) {
    const double g0 = (c.mae[k - 1] - c.oracle_mae[k - 1]) * norm;
    const double g1 = (c.mae[k] - c.oracle_mae[k]) * norm;
    area += 0.5 * (g0 + g1) * (c.fractions[k] - c.fractions[k - 1]);
  }
  return area;
}

/// Per-pixel mean-channel absolute difference.
inline Image abs_error_image(const Image& a, const Image& b) {
  require_same_shape(a, b, "abs_error_image");
  Image out(a.width, a.height, 1);
  for (std::size_t j = 0; j < out.pixel_count(); ++j) {
    double s = 0.0;
    for (int c = 0; c < a.channels; ++c) s += std::abs(a[j * a.channels + c] - b[j * a.channels + c]);
    out[j] = s / a.channels;
  }
  return out;
}

}  // namespace gaussmi
