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

#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>

#include "doctest.h"
#include "dadf/synthetic.hpp"
#include "json.hpp"

using namespace dadf;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI with stdout captured and stderr discarded.
Result run(const std::string& args) {
  const std::string cmd = std::string(DADF_CLI_PATH) + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Width and height of a binary PGM, skipping comment lines.
std::pair<std::size_t, std::size_t> pgm_size(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string token;
  std::vector<std::size_t> values;
  in >> token;
  while (values.size() < 2 && in >> token) {
    if (token[0] == '#') {
      std::getline(in, token);
      continue;
    }
    values.push_back(std::stoul(token));
  }
  return {values.at(0), values.at(1)};
}

const std::string kTiny =
    " --set encoder.in_size=32 --set patch.token_dim=24"
    " --set attention.heads=2 --set attention.depth=1 --set attention.mlp_ratio=2"
    " --set flow.n_blocks=2 --set train.batch_size=4 --set train.lr=1e-3"
    " --set train.stage1_epochs=4 --set train.stage2_epochs=2";

const std::string kTinyData =
    " --spec image_size=32 --spec n_train=12 --spec n_test_normal=4 --spec n_test_anomalous=6";

struct Workspace {
  fs::path root = fs::temp_directory_path() / ("dadf_cli_" + std::to_string(getpid()));
  Workspace() { fs::create_directories(root); }
  ~Workspace() { fs::remove_all(root); }
  std::string path(const std::string& name) const { return (root / name).string(); }
};

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run("gen-data").code == 2);
  CHECK(run("no-such-command").code == 2);
  CHECK(run("gen-data --out /tmp/x --spec texture").code == 2);
}

TEST_CASE("gen-data writes a reproducible tree") {
  Workspace ws;
  const Result a = run("gen-data --out " + ws.path("a"));
  REQUIRE(a.code == 0);
  for (const char* sub : {"train", "test", "masks", "manifest.tsv"}) CHECK(fs::exists(ws.root / "a" / sub));
  REQUIRE(run("gen-data --out " + ws.path("b")).code == 0);
  for (const auto& e : fs::recursive_directory_iterator(ws.root / "a")) {
    if (e.is_regular_file()) CHECK(slurp(e.path()) == slurp(ws.root / "b" / fs::relative(e.path(), ws.root / "a")));
  }
}

TEST_CASE("train, score and eval end to end") {
  Workspace ws;
  REQUIRE(run("gen-data --out " + ws.path("data") + kTinyData).code == 0);
  const std::string ckpt = ws.path("model.ckpt");

  CHECK(run("train --data " + ws.path("data") + " --out " + ckpt + " --stage flow" + kTiny).code == 1);

  const Result trained = run("train --data " + ws.path("data") + " --out " + ckpt + " --stage all" + kTiny);
  REQUIRE(trained.code == 0);
  std::istringstream tsv(trained.out);
  std::string line;
  std::getline(tsv, line);
  CHECK(line == "stage\tepoch\tloss_self\tloss_memory\tloss_flow");
  std::size_t rows = 0, last_epoch = 0;
  std::string last_stage;
  while (std::getline(tsv, line)) {
    std::istringstream fields(line);
    std::string stage;
    std::size_t epoch = 0;
    fields >> stage >> epoch;
    if (stage != last_stage) last_epoch = 0;
    CHECK(epoch == last_epoch + 1);
    last_epoch = epoch;
    last_stage = stage;
    ++rows;
  }
  CHECK(rows == 6);
  CHECK(fs::exists(ckpt));

  SUBCASE("score") {
    const std::string image = ws.path("data/train/normal_0000.ppm");
    const Result a = run("score --image " + image + " --ckpt " + ckpt + " --heatmap " + ws.path("a.pgm"));
    const Result b = run("score --image " + image + " --ckpt " + ckpt + " --heatmap " + ws.path("b.pgm"));
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(slurp(ws.path("a.pgm")) == slurp(ws.path("b.pgm")));
    CHECK(pgm_size(ws.path("a.pgm")) == std::pair<std::size_t, std::size_t>{32, 32});

    Rng rng(1);
    const DefectSample patched = apply_defect(read_ppm(image), AnomalyKind::kPatch, rng);
    write_ppm(ws.path("patched.ppm"), patched.image);
    const Result normal = run("score --image " + image + " --ckpt " + ckpt + " --mode recon_self");
    const Result broken = run("score --image " + ws.path("patched.ppm") + " --ckpt " + ckpt + " --mode recon_self");
    REQUIRE(normal.code == 0);
    REQUIRE(broken.code == 0);
    CHECK(std::stod(normal.out) < std::stod(broken.out));

    RgbImage wrong{16, 16, std::vector<std::uint8_t>(16 * 16 * 3, 0)};
    write_ppm(ws.path("small.ppm"), wrong);
    CHECK(run("score --image " + ws.path("small.ppm") + " --ckpt " + ckpt).code == 1);
  }

  SUBCASE("eval") {
    const Result r = run("eval --data " + ws.path("data") + " --ckpt " + ckpt + " --report " + ws.path("r.json"));
    REQUIRE(r.code == 0);
    const auto json = nlohmann::json::parse(slurp(ws.path("r.json")));
    std::set<std::string> keys;
    for (const auto& item : json.items()) keys.insert(item.key());
    CHECK(keys == std::set<std::string>{"image_auroc", "pixel_auroc", "au_pro", "spro", "per_scale"});
    CHECK(nlohmann::json::parse(r.out) == json);

    REQUIRE(run("gen-data --out " + ws.path("clean") + kTinyData + " --spec n_test_anomalous=0").code == 0);
    CHECK(run("eval --data " + ws.path("clean") + " --ckpt " + ckpt).code == 1);
  }
}

TEST_CASE("selftest passes within five CPU minutes") {
  rusage before{}, after{};
  getrusage(RUSAGE_CHILDREN, &before);
  const Result r = run("selftest");
  getrusage(RUSAGE_CHILDREN, &after);
  auto seconds = [](const rusage& u) {
    return static_cast<double>(u.ru_utime.tv_sec + u.ru_stime.tv_sec) +
           static_cast<double>(u.ru_utime.tv_usec + u.ru_stime.tv_usec) / 1e6;
  };
  CHECK(r.code == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
  CHECK(seconds(after) - seconds(before) < 300);
}
