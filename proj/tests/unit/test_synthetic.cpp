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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <unistd.h>

#include "doctest.h"
#include "dadf/errors.hpp"
#include "dadf/synthetic.hpp"

using namespace dadf;
namespace fs = std::filesystem;

namespace {

DatasetSpec small_spec() {
  DatasetSpec spec;
  spec.image_size = 32;
  spec.n_train = 4;
  spec.n_test_normal = 3;
  spec.n_test_anomalous = 6;
  return spec;
}

fs::path scratch(const std::string& name) {
  return fs::temp_directory_path() / ("dadf_synth_" + std::to_string(getpid()) + "_" + name);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double mean_abs_diff(const DefectSample& s, bool inside) {
  double total = 0;
  std::size_t n = 0;
  for (std::size_t p = 0; p < s.mask.pixels.size(); ++p) {
    if ((s.mask.pixels[p] != 0) != inside) continue;
    for (std::size_t c = 0; c < 3; ++c) {
      total += std::abs(int(s.image.pixels[p * 3 + c]) - int(s.base.pixels[p * 3 + c]));
    }
    ++n;
  }
  return n ? total / static_cast<double>(n) : 0;
}

}  // namespace

TEST_CASE("generation is byte-reproducible") {
  const fs::path a = scratch("a"), b = scratch("b");
  generate(small_spec(), a);
  generate(small_spec(), b);
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a);
    CHECK(slurp(entry.path()) == slurp(b / rel));
    ++files;
  }
  CHECK(files == 4 + 3 + 6 + 6 + 1);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("defects") {
  const DatasetSpec spec = small_spec();
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const RgbImage base = render_normal(spec, rng);
    SUBCASE("swap only rearranges pixels") {
      const DefectSample s = apply_defect(base, AnomalyKind::kSwap, rng);
      auto x = s.image.pixels, y = s.base.pixels;
      std::sort(x.begin(), x.end());
      std::sort(y.begin(), y.end());
      CHECK(x == y);
      CHECK(std::count(s.mask.pixels.begin(), s.mask.pixels.end(), 255) > 0);
    }
    SUBCASE("patch changes the masked area most") {
      const DefectSample s = apply_defect(base, AnomalyKind::kPatch, rng);
      CHECK(mean_abs_diff(s, true) > mean_abs_diff(s, false));
    }
    SUBCASE("scratch has a nonempty mask") {
      const DefectSample s = apply_defect(base, AnomalyKind::kScratch, rng);
      CHECK(std::count(s.mask.pixels.begin(), s.mask.pixels.end(), 255) > 0);
    }
  }
}

TEST_CASE("load preserves the manifest") {
  const fs::path root = scratch("load");
  const DatasetSpec spec = small_spec();
  generate(spec, root);
  const auto samples = load(root);
  REQUIRE(samples.size() == 13);
  std::ifstream manifest(root / "manifest.tsv");
  std::string line;
  std::vector<std::string> paths;
  while (std::getline(manifest, line)) {
    if (line.empty() || line[0] == '#') continue;
    const std::string path = line.substr(0, line.find('\t'));
    if (path != "path") paths.push_back(path);
  }
  REQUIRE(paths.size() == samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) CHECK(samples[k].path == paths[k]);

  const auto train = select_split(samples, true), test = select_split(samples, false);
  CHECK(train.size() == 4);
  std::size_t anomalous = 0;
  for (const Sample& s : test) {
    const auto on = std::count(s.mask.begin(), s.mask.end(), 1);
    CHECK((s.label == 1) == (on > 0));
    anomalous += s.label;
  }
  CHECK(anomalous == 6);
  for (const Sample& s : train) CHECK(s.label == 0);

  // A damaged image makes load name the file.
  const fs::path victim = root / samples.front().path;
  fs::resize_file(victim, fs::file_size(victim) / 2);
  try {
    load(root);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find(samples.front().path) != std::string::npos);
  }
  fs::remove_all(root);
}

TEST_CASE("netpbm round trip") {
  const fs::path p = scratch("img.ppm");
  RgbImage img{2, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18}};
  write_ppm(p, img);
  const RgbImage back = read_ppm(p);
  CHECK(back.pixels == img.pixels);
  CHECK(back.height == 2);
  fs::remove(p);
}

TEST_CASE("dataset settings validation") {
  DatasetSpec spec;
  spec.anomaly_kinds.clear();
  CHECK_THROWS_AS(spec.validate(), ContractError);
  CHECK(parse_texture("checker") == Texture::kChecker);
  CHECK_THROWS_AS(parse_anomaly_kind("dent"), ContractError);
}
