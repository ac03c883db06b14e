// Copyright 2026 The DADF Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dadf/synthetic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

DADF_NAMESPACE_BEGIN

namespace fs = std::filesystem;

std::string to_string(Texture texture) {
  switch (texture) {
    case Texture::kStripes: return "stripes";
    case Texture::kChecker: return "checker";
    case Texture::kBlobs: return "blobs";
  }
  return "?";
}

std::string to_string(AnomalyKind kind) {
  switch (kind) {
    case AnomalyKind::kPatch: return "patch";
    case AnomalyKind::kScratch: return "scratch";
    case AnomalyKind::kSwap: return "swap";
  }
  return "?";
}

Texture parse_texture(const std::string& text) {
  for (Texture t : {Texture::kStripes, Texture::kChecker, Texture::kBlobs}) {
    if (to_string(t) == text) return t;
  }
  throw ContractError("unknown texture '" + text + "' (expected stripes, checker or blobs)");
}

AnomalyKind parse_anomaly_kind(const std::string& text) {
  for (AnomalyKind k : {AnomalyKind::kPatch, AnomalyKind::kScratch, AnomalyKind::kSwap}) {
    if (to_string(k) == text) return k;
  }
  throw ContractError("unknown anomaly kind '" + text + "' (expected patch, scratch or swap)");
}

void DatasetSpec::validate() const {
  if (image_size < 16 || image_size % 16 != 0) {
    throw ContractError("image_size must be a multiple of 16 and at least 16");
  }
  if (n_train == 0) throw ContractError("n_train must be positive");
  if (n_test_anomalous > 0 && anomaly_kinds.empty()) {
    throw ContractError("anomalous test images requested but no anomaly kinds given");
  }
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

double byte_value(std::uint8_t b) { return static_cast<double>(b) / 255.0; }

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Smooth value noise in [-1, 1] on a lattice with `cell` pixel spacing.
struct ValueNoise {
  std::size_t cells;
  double cell;
  std::vector<double> lattice;

  ValueNoise(std::size_t size, double cell_size, Rng& rng)
      : cells(static_cast<std::size_t>(std::ceil(static_cast<double>(size) / cell_size)) + 2),
        cell(cell_size),
        lattice(cells * cells) {
    for (double& v : lattice) v = static_cast<double>(rng.uniform(-1, 1));
  }

  double at(double x, double y) const {
    const double gx = x / cell, gy = y / cell;
    const auto ix = static_cast<std::size_t>(gx), iy = static_cast<std::size_t>(gy);
    const double fx = smoothstep(gx - static_cast<double>(ix));
    const double fy = smoothstep(gy - static_cast<double>(iy));
    auto l = [&](std::size_t a, std::size_t b) { return lattice[b * cells + a]; };
    const double top = l(ix, iy) * (1 - fx) + l(ix + 1, iy) * fx;
    const double bottom = l(ix, iy + 1) * (1 - fx) + l(ix + 1, iy + 1) * fx;
    return top * (1 - fy) + bottom * fy;
  }
};

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double cx = ax + t * dx - px, cy = ay + t * dy - py;
  return std::sqrt(cx * cx + cy * cy);
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string indexed(const std::string& stem, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "_%04zu", i);
  return stem + buf;
}

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in, const fs::path& path) {
  std::string token;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!token.empty()) return token;
      continue;
    }
    token.push_back(static_cast<char>(ch));
  }
  if (token.empty()) throw FormatError(path.string() + ": truncated Netpbm header");
  return token;
}

std::size_t header_number(std::istream& in, const fs::path& path) {
  const std::string token = header_token(in, path);
  std::size_t value = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size() || value == 0) {
    throw FormatError(path.string() + ": malformed Netpbm header field '" + token + "'");
  }
  return value;
}

std::vector<std::uint8_t> read_netpbm(const fs::path& path, const char* magic, std::size_t channels,
                                      std::size_t& height, std::size_t& width) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string() + ": cannot open");
  const std::string m = header_token(in, path);
  if (m != magic) {
    throw FormatError(path.string() + ": expected Netpbm magic " + magic + ", found '" + m + "'");
  }
  width = header_number(in, path);
  height = header_number(in, path);
  const std::size_t maxval = header_number(in, path);
  if (maxval != 255) throw FormatError(path.string() + ": only 8-bit images are supported");
  std::vector<std::uint8_t> data(height * width * channels);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (static_cast<std::size_t>(in.gcount()) != data.size()) {
    throw FormatError(path.string() + ": truncated pixel data");
  }
  if (in.peek() != EOF) throw FormatError(path.string() + ": trailing bytes after pixel data");
  return data;
}

void write_file(const fs::path& path, const std::string& header, const std::uint8_t* data,
                std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(path.string() + ": cannot open for writing");
  out << header;
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw FormatError(path.string() + ": write failed");
}

}  // namespace

RgbImage render_normal(const DatasetSpec& spec, Rng& rng) {
  const std::size_t n = spec.image_size;
  const double phase = static_cast<double>(rng.uniform(0, static_cast<Real>(kTwoPi)));
  const double phase_y = static_cast<double>(rng.uniform(0, static_cast<Real>(kTwoPi)));
  const double angle = 0.52 + 0.03 * static_cast<double>(rng.normal());
  const double freq = (1.0 / 8.0) * (1.0 + 0.05 * static_cast<double>(rng.uniform(-1, 1)));
  const ValueNoise noise(n, 8.0, rng);
  const double tint[3] = {1.0, 0.85, 0.7};
  const double scale = 1.0 / static_cast<double>(n - 1);

  RgbImage img{n, n, std::vector<std::uint8_t>(n * n * 3)};
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double fx = static_cast<double>(x), fy = static_cast<double>(y);
      double pattern = 0;
      switch (spec.texture) {
        case Texture::kStripes:
          pattern = std::sin(kTwoPi * freq * (fx * std::cos(angle) + fy * std::sin(angle)) + phase);
          break;
        case Texture::kChecker:
          pattern = std::tanh(3.0 * std::sin(kTwoPi * fx / 16.0 + phase) *
                              std::sin(kTwoPi * fy / 16.0 + phase_y));
          break;
        case Texture::kBlobs:
          pattern = noise.at(fx, fy);
          break;
      }
      // Fixed global colour layout: position-dependent ramps per channel.
      const double u = fx * scale - 0.5, v = fy * scale - 0.5;
      const double ramp[3] = {0.30 * u, 0.30 * v, -0.15 * (u + v)};
      for (std::size_t c = 0; c < 3; ++c) {
        const double value = 0.5 + 0.18 * pattern * tint[c] + ramp[c] + 0.02 * static_cast<double>(rng.normal());
        img.pixels[(y * n + x) * 3 + c] = to_byte(value);
      }
    }
  }
  return img;
}

DefectSample apply_defect(const RgbImage& base, AnomalyKind kind, Rng& rng) {
  const std::size_t n = base.height;
  DefectSample out{base, base, GrayImage{n, base.width, std::vector<std::uint8_t>(n * base.width, 0)},
                   kind, 1.0};
  auto& px = out.image.pixels;
  auto& mask = out.mask.pixels;
  const std::size_t w = base.width;
  switch (kind) {
    case AnomalyKind::kPatch: {
      const auto side = static_cast<std::size_t>(rng.integer(8, 14));
      const auto y0 = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(n - side)));
      const auto x0 = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(w - side)));
      // Moderate intensity shift of the same sign on every channel.
      const double sign = rng.uniform() < Real(0.5) ? -1.0 : 1.0;
      double shift[3];
      for (double& c : shift) c = sign * static_cast<double>(rng.uniform(0.15, 0.3));
      for (std::size_t y = y0; y < y0 + side; ++y) {
        for (std::size_t x = x0; x < x0 + side; ++x) {
          for (std::size_t c = 0; c < 3; ++c) {
            const std::size_t i = (y * w + x) * 3 + c;
            px[i] = to_byte(byte_value(base.pixels[i]) + shift[c]);
          }
          mask[y * w + x] = 255;
        }
      }
      break;
    }
    case AnomalyKind::kScratch: {
      const double margin = 8.0;
      const double hi = static_cast<double>(n) - margin;
      double pts[3][2];
      pts[0][0] = static_cast<double>(rng.uniform(static_cast<Real>(margin), static_cast<Real>(hi)));
      pts[0][1] = static_cast<double>(rng.uniform(static_cast<Real>(margin), static_cast<Real>(hi)));
      double heading = static_cast<double>(rng.uniform(0, static_cast<Real>(kTwoPi)));
      for (int k = 1; k < 3; ++k) {
        const double len = static_cast<double>(rng.uniform(14, 24));
        pts[k][0] = std::clamp(pts[k - 1][0] + len * std::cos(heading), 2.0, static_cast<double>(n) - 3.0);
        pts[k][1] = std::clamp(pts[k - 1][1] + len * std::sin(heading), 2.0, static_cast<double>(n) - 3.0);
        heading += static_cast<double>(rng.uniform(-1, 1));
      }
      const double tone = rng.uniform() < Real(0.5) ? 0.1 : 0.9;
      for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          const double fx = static_cast<double>(x), fy = static_cast<double>(y);
          const double d = std::min(segment_distance(fx, fy, pts[0][0], pts[0][1], pts[1][0], pts[1][1]),
                                    segment_distance(fx, fy, pts[1][0], pts[1][1], pts[2][0], pts[2][1]));
          if (d > 1.1) continue;
          for (std::size_t c = 0; c < 3; ++c) {
            const std::size_t i = (y * w + x) * 3 + c;
            px[i] = to_byte(0.6 * tone + 0.4 * byte_value(base.pixels[i]));
          }
          mask[y * w + x] = 255;
        }
      }
      break;
    }
    case AnomalyKind::kSwap: {
      const std::size_t half = n / 2;
      const auto first = static_cast<std::size_t>(rng.integer(0, 3));
      auto second = static_cast<std::size_t>(rng.integer(0, 2));
      if (second >= first) ++second;
      const std::size_t oy[4] = {0, 0, half, half}, ox[4] = {0, half, 0, half};
      for (std::size_t y = 0; y < half; ++y) {
        for (std::size_t x = 0; x < half; ++x) {
          const std::size_t a = (oy[first] + y) * w + ox[first] + x;
          const std::size_t b = (oy[second] + y) * w + ox[second] + x;
          for (std::size_t c = 0; c < 3; ++c) std::swap(px[a * 3 + c], px[b * 3 + c]);
          mask[a] = 255;
          mask[b] = 255;
        }
      }
      out.saturation = 0.5;
      break;
    }
  }
  return out;
}

Tensor to_tensor(const RgbImage& image) {
  std::vector<Real> values(image.pixels.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = static_cast<Real>(image.pixels[i]) / Real(255);
  }
  return Tensor::from({image.height, image.width, 3}, std::move(values));
}

void write_ppm(const fs::path& path, const RgbImage& image) {
  write_file(path, "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n",
             image.pixels.data(), image.pixels.size());
}

RgbImage read_ppm(const fs::path& path) {
  RgbImage img;
  img.pixels = read_netpbm(path, "P6", 3, img.height, img.width);
  return img;
}

void write_pgm(const fs::path& path, const GrayImage& image) {
  write_file(path, "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n",
             image.pixels.data(), image.pixels.size());
}

GrayImage read_pgm(const fs::path& path) {
  GrayImage img;
  img.pixels = read_netpbm(path, "P5", 1, img.height, img.width);
  return img;
}

void write_pgm16(const fs::path& path, std::size_t height, std::size_t width,
                 const std::vector<std::uint16_t>& pixels, const std::vector<std::string>& comments) {
  if (pixels.size() != height * width) throw ShapeError("write_pgm16: pixel count mismatch");
  std::string header = "P5\n";
  for (const auto& c : comments) header += "# " + c + "\n";
  header += std::to_string(width) + " " + std::to_string(height) + "\n65535\n";
  std::vector<std::uint8_t> bytes(pixels.size() * 2);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    bytes[2 * i] = static_cast<std::uint8_t>(pixels[i] >> 8);
    bytes[2 * i + 1] = static_cast<std::uint8_t>(pixels[i] & 0xFF);
  }
  write_file(path, header, bytes.data(), bytes.size());
}

fs::path generate(const DatasetSpec& spec, const fs::path& root) {
  spec.validate();
  for (const char* sub : {"train", "test", "masks"}) fs::create_directories(root / sub);
  std::ostringstream manifest;
  for (std::size_t i = 0; i < spec.n_train; ++i) {
    Rng rng(derive_seed(spec.seed, 1'000'000 + i));
    const std::string rel = "train/" + indexed("normal", i) + ".ppm";
    write_ppm(root / rel, render_normal(spec, rng));
    manifest << rel << "\t0\t-\t1\n";
  }
  for (std::size_t i = 0; i < spec.n_test_normal; ++i) {
    Rng rng(derive_seed(spec.seed, 2'000'000 + i));
    const std::string rel = "test/" + indexed("normal", i) + ".ppm";
    write_ppm(root / rel, render_normal(spec, rng));
    manifest << rel << "\t0\t-\t1\n";
  }
  for (std::size_t i = 0; i < spec.n_test_anomalous; ++i) {
    Rng rng(derive_seed(spec.seed, 3'000'000 + i));
    const AnomalyKind kind = spec.anomaly_kinds[i % spec.anomaly_kinds.size()];
    const DefectSample s = apply_defect(render_normal(spec, rng), kind, rng);
    const std::string stem = indexed(to_string(kind), i);
    const std::string rel = "test/" + stem + ".ppm";
    const std::string mask_rel = "masks/" + stem + ".pgm";
    write_ppm(root / rel, s.image);
    write_pgm(root / mask_rel, s.mask);
    manifest << rel << "\t1\t" << mask_rel << "\t" << format_number(s.saturation) << "\n";
  }
  const fs::path manifest_path = root / "manifest.tsv";
  std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(manifest_path.string() + ": cannot open for writing");
  out << manifest.str();
  if (!out) throw FormatError(manifest_path.string() + ": write failed");
  return manifest_path;
}

std::vector<Sample> load(const fs::path& root) {
  const fs::path manifest_path = root / "manifest.tsv";
  std::ifstream in(manifest_path);
  if (!in) throw FormatError(manifest_path.string() + ": cannot open manifest");
  std::vector<Sample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, '\t');) fields.push_back(f);
    const std::string where = manifest_path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 4) throw FormatError(where + ": expected 4 tab-separated fields");
    Sample s;
    s.path = fields[0];
    s.train = s.path.rfind("train/", 0) == 0;
    if (!s.train && s.path.rfind("test/", 0) != 0) {
      throw FormatError(where + ": image path must start with train/ or test/");
    }
    if (fields[1] != "0" && fields[1] != "1") throw FormatError(where + ": label must be 0 or 1");
    s.label = fields[1] == "1" ? 1 : 0;
    double sat = 0;
    const auto res = std::from_chars(fields[3].data(), fields[3].data() + fields[3].size(), sat);
    if (res.ec != std::errc() || !(sat > 0 && sat <= 1)) {
      throw FormatError(where + ": saturation must be a number in (0, 1]");
    }
    s.saturation = sat;
    const std::string stem = fs::path(s.path).stem().string();
    s.kind = stem.substr(0, stem.rfind('_'));

    const RgbImage rgb = read_ppm(root / s.path);
    s.image = to_tensor(rgb);
    s.mask.assign(rgb.height * rgb.width, 0);
    if (fields[2] != "-") {
      const GrayImage m = read_pgm(root / fields[2]);
      if (m.height != rgb.height || m.width != rgb.width) {
        throw FormatError((root / fields[2]).string() + ": mask size differs from its image");
      }
      for (std::size_t i = 0; i < m.pixels.size(); ++i) s.mask[i] = m.pixels[i] ? 1 : 0;
    }
    const bool nonempty = std::any_of(s.mask.begin(), s.mask.end(), [](std::uint8_t v) { return v; });
    if (nonempty != (s.label == 1)) {
      throw FormatError((root / s.path).string() + ": label " + fields[1] +
                        " inconsistent with its mask");
    }
    if (s.train && s.label == 1) {
      throw ContractError((root / s.path).string() + ": anomalous sample in the train split");
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<Sample> select_split(const std::vector<Sample>& samples, bool train) {
  std::vector<Sample> out;
  std::copy_if(samples.begin(), samples.end(), std::back_inserter(out),
               [train](const Sample& s) { return s.train == train; });
  return out;
}

DADF_NAMESPACE_END
