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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dadf/random.hpp"
#include "dadf/tensor.hpp"

DADF_NAMESPACE_BEGIN

enum class Texture { kStripes, kChecker, kBlobs };
enum class AnomalyKind { kPatch, kScratch, kSwap };

std::string to_string(Texture texture);
std::string to_string(AnomalyKind kind);
Texture parse_texture(const std::string& text);
AnomalyKind parse_anomaly_kind(const std::string& text);

struct DatasetSpec {
  Texture texture = Texture::kStripes;
  std::size_t image_size = 64;
  std::size_t n_train = 160;
  std::size_t n_test_normal = 40;
  std::size_t n_test_anomalous = 60;
  /// Anomalous test images cycle through these kinds in order.
  std::vector<AnomalyKind> anomaly_kinds = {AnomalyKind::kPatch, AnomalyKind::kScratch,
                                            AnomalyKind::kSwap};
  std::uint64_t seed = 0;

  void validate() const;
};

/// 8-bit RGB image, row-major, 3 bytes per pixel.
struct RgbImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;
};

struct GrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;
};

/// A defect applied to a normal image; `base` is the untouched original.
struct DefectSample {
  RgbImage image;
  RgbImage base;
  GrayImage mask;  // 255 on anomalous pixels
  AnomalyKind kind = AnomalyKind::kPatch;
  double saturation = 1.0;
};

/// Normal image: texture field modulated by a fixed global colour layout,
/// with per-image phase/orientation jitter and pixel noise.
RgbImage render_normal(const DatasetSpec& spec, Rng& rng);
/// patch: high-contrast square; scratch: thin random polyline;
/// swap: two image quadrants exchanged, masked over both.
DefectSample apply_defect(const RgbImage& base, AnomalyKind kind, Rng& rng);

struct Sample {
  std::string path;  // relative to the dataset root, as in the manifest
  bool train = false;
  std::string kind;  // "normal" or the anomaly kind, from the file name
  Tensor image;      // H x W x 3 in [0, 1]
  std::vector<std::uint8_t> mask;  // H*W, 0/1
  std::uint8_t label = 0;
  double saturation = 1.0;
};

/// Writes train/, test/, masks/ and manifest.tsv under `root`. Returns the
/// manifest path.
std::filesystem::path generate(const DatasetSpec& spec, const std::filesystem::path& root);

/// Loads every manifest entry in manifest order. Throws FormatError naming
/// the offending file; a train entry labelled anomalous is a ContractError.
std::vector<Sample> load(const std::filesystem::path& root);

std::vector<Sample> select_split(const std::vector<Sample>& samples, bool train);

Tensor to_tensor(const RgbImage& image);

// Netpbm I/O (binary variants).
void write_ppm(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_ppm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);
GrayImage read_pgm(const std::filesystem::path& path);
/// 16-bit PGM (big-endian samples) with optional comment lines after the magic.
void write_pgm16(const std::filesystem::path& path, std::size_t height, std::size_t width,
                 const std::vector<std::uint16_t>& pixels, const std::vector<std::string>& comments);

DADF_NAMESPACE_END
