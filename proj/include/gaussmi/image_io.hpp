#pragma once

// PPM (P6, 8-bit), PFM (single channel, little endian) and CSV writers.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gaussmi/types.hpp"

namespace gaussmi {

inline void write_ppm(const Image& img, const std::string& path) {
  if (img.channels != 3 && img.channels != 1) throw Error("write_ppm: '" + path + "': expected 1 or 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_ppm: cannot open '" + path + "'");
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> buf;
  buf.reserve(img.pixel_count() * 3);
  for (std::size_t j = 0; j < img.pixel_count(); ++j)
    for (int c = 0; c < 3; ++c) {
      const double v = img[j * img.channels + (img.channels == 3 ? c : 0)];
      buf.push_back(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
    }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error("write_ppm: failed writing '" + path + "'");
}

inline Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("read_ppm: cannot open '" + path + "'");
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255) throw ParseError("read_ppm: '" + path + "': unsupported header");
  in.get();
  std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) throw ParseError("read_ppm: '" + path + "': truncated");
  Image img(w, h, 3);
  for (std::size_t i = 0; i < buf.size(); ++i) img[i] = buf[i] / 255.0;
  return img;
}

/// Single-channel PFM, scale -1 (little endian), rows stored bottom to top.
inline void write_pfm(const Image& img, const std::string& path) {
  static_assert(std::endian::native == std::endian::little);
  if (img.channels != 1) throw Error("write_pfm: '" + path + "': expected a single-channel image");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_pfm: cannot open '" + path + "'");
  out << "Pf\n" << img.width << " " << img.height << "\n-1.0\n";
  std::vector<float> row(static_cast<std::size_t>(img.width));
  for (int y = img.height - 1; y >= 0; --y) {
    for (int x = 0; x < img.width; ++x) row[static_cast<std::size_t>(x)] = static_cast<float>(img.at(x, y));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw Error("write_pfm: failed writing '" + path + "'");
}

inline Image read_pfm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("read_pfm: cannot open '" + path + "'");
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  if (magic != "Pf" || w <= 0 || h <= 0 || !(scale < 0.0))
    throw ParseError("read_pfm: '" + path + "': expected single-channel little-endian PFM");
  in.get();
  Image img(w, h, 1);
  std::vector<float> row(static_cast<std::size_t>(w));
  for (int y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(row.size() * sizeof(float)))
      throw ParseError("read_pfm: '" + path + "': truncated");
    for (int x = 0; x < w; ++x) img.at(x, y) = row[static_cast<std::size_t>(x)];
  }
  return img;
}

/// Writes a header row followed by numeric rows. Doubles use round-trip precision.
inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("write_csv: cannot open '" + path + "'");
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  out.precision(17);
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw Error("write_csv: '" + path + "': row width does not match header");
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << "\n";
  }
  if (!out) throw Error("write_csv: failed writing '" + path + "'");
}

inline std::vector<std::vector<double>> read_csv(const std::string& path, std::vector<std::string>* header = nullptr) {
  std::ifstream in(path);
  if (!in) throw Error("read_csv: cannot open '" + path + "'");
  std::string line;
  std::vector<std::vector<double>> rows;
  if (!std::getline(in, line)) throw ParseError("read_csv: '" + path + "': missing header");
  if (header) {
    header->clear();
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) header->push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError("read_csv: '" + path + "': bad number '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace gaussmi
