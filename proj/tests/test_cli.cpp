// Copyright 2026 The tabnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "tabnn/checkpoint.hpp"
#include "tabnn/config.hpp"
#include "tabnn/error.hpp"
#include "test_util.hpp"

using namespace tabnn;
using tabnn::testing::TempDir;

namespace {

std::string Source(const std::string& rel) { return std::string(TABNN_SOURCE_DIR) + "/" + rel; }

int Run(const std::string& args) {
  const std::string cmd = std::string(TABNN_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmallSpiral = R"({
  "dataset": {"kind": "spiral", "n_per_class": 100, "seed": 2},
  "architecture": {"widths": [8, 2], "bits": 2, "fan_in": 2, "degree": 2, "input_bits": 4},
  "training": {"epochs_dense": 3, "epochs_retrain": 4, "batch_size": 32, "restart_period": 2},
  "output": {"dir": "unused", "stem": "small"}
})";

}  // namespace

TEST_CASE("shipped configs parse and round trip") {
  for (const char* name : {"spiral", "jsc_m", "jsc_m_lite", "jsc_xl", "nid_lite", "hdr"}) {
    CAPTURE(name);
    const PipelineConfig c = LoadPipelineConfig(Source("configs/") + name + ".json");
    CHECK(ParsePipelineConfig(SerializePipelineConfig(c)) == c);
  }
  const PipelineConfig lite = LoadPipelineConfig(Source("configs/jsc_m_lite.json"));
  CHECK(lite.architecture.widths == std::vector<int>{64, 32, 5});
  CHECK(lite.architecture.bits == 3);
  CHECK(lite.architecture.fan_in == 4);
  CHECK(lite.architecture.degree == 6);

  const PipelineConfig xl = LoadPipelineConfig(Source("configs/jsc_xl.json"));
  const auto arch = BuildArchitecture(xl.architecture, 16);
  CHECK(arch[0].in_bits == 7);
  CHECK(arch[0].fan_in == 2);
  CHECK(arch[1].in_bits == 5);
  CHECK(arch[1].fan_in == 3);
  for (const LayerConfig& c : arch) CHECK(c.out_bits == 5);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(ParsePipelineConfig("{\"dataset\": "), ParseError);
  try {
    ParsePipelineConfig(R"({
      "dataset": {"kind": "spiral", "n_per_class": 0},
      "architecture": {"widths": [4, 2], "bits": 0, "fan_in": 2, "colour": 1},
      "training": {"batch_size": 0, "lambda2": -1}
    })");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    for (const char* field : {"dataset.n_per_class", "architecture.bits", "architecture.colour",
                              "training.batch_size", "training.lambda2"}) {
      CHECK_MESSAGE(what.find(field) != std::string::npos, field);
    }
  }
  CHECK_THROWS_AS(ParsePipelineConfig(R"({"architecture": {"widths": "wide"}})"), ConfigError);
}

TEST_CASE("overrides") {
  const std::vector<std::string> sets = {"training.seed=9", "architecture.widths=[6,2]",
                                         "output.stem=run", "training.pruning=random"};
  const PipelineConfig c = ParsePipelineConfig(kSmallSpiral, sets);
  CHECK(c.training.seed == 9);
  CHECK(c.architecture.widths == std::vector<int>{6, 2});
  CHECK(c.output.stem == "run");
  CHECK(c.training.pruning == Pruning::kRandom);
  CHECK_THROWS_AS(ParsePipelineConfig(kSmallSpiral, std::vector<std::string>{"training.nope=1"}),
                  ConfigError);
  CHECK_THROWS_AS(ParsePipelineConfig(kSmallSpiral, std::vector<std::string>{"seed"}),
                  ConfigError);
}

TEST_CASE("data preparation checks the architecture against the data") {
  const PipelineConfig c = ParsePipelineConfig(kSmallSpiral);
  const PreparedData d = PrepareData(c);
  CHECK(d.train.rows == 160);
  CHECK(d.test.rows == 40);
  CHECK(d.train.input_spec.bits == 4);
  CHECK(d.arch.size() == 2);
  CHECK(d.arch[0].in_width == 2);

  const PipelineConfig wrong =
      ParsePipelineConfig(kSmallSpiral, std::vector<std::string>{"architecture.widths=[8,3]"});
  CHECK_THROWS_AS(PrepareData(wrong), ConfigError);
}

TEST_CASE("command line") {
  TempDir dir;
  WriteFile(dir / "small.json", kSmallSpiral);
  const std::string cfg = "--config " + (dir / "small.json");
  const std::string out = dir / "out";

  CHECK(Run("train " + cfg + " --out " + out) == 0);
  for (const char* f : {"small_dense.json", "small_pruned.json", "small_sparse.json",
                        "small_masks.json", "small_metrics.jsonl", "small_config.json"}) {
    CHECK_MESSAGE(std::filesystem::exists(out + "/" + f), f);
  }
  const std::string sparse = out + "/small_sparse.json";
  CHECK(Run("compile --checkpoint " + out + "/small_dense.json --out " + (dir / "d")) == 1);
  CHECK(Run("compile --checkpoint " + sparse) == 0);
  CHECK(std::filesystem::exists(out + "/netlist.json"));
  CHECK(std::filesystem::exists(out + "/verilog/top.v"));
  const std::string net = " --netlist " + out + "/netlist.json";
  CHECK(Run("verify " + cfg + " --checkpoint " + sparse + net + " --report " +
            (dir / "r.json")) == 0);
  CHECK(ReadFile(dir / "r.json").find("\"pass\": true") != std::string::npos);
  CHECK(Run("eval " + cfg + " --checkpoint " + sparse + net) == 0);

  // A different seed gives a different checkpoint; its netlist is stale.
  CHECK(Run("train " + cfg + " --seed 5 --out " + (dir / "other")) == 0);
  CHECK(Run("verify " + cfg + " --checkpoint " + (dir / "other/small_sparse.json") + net) == 2);

  CHECK(Run("train --config " + (dir / "absent.json")) == 3);
  CHECK(Run("train " + cfg + " --set training.batch_size=0") == 1);
  CHECK(Run("sweep " + cfg + " --seeds 1") == 1);
  CHECK(Run("sweep " + cfg + " --seeds 1,2,3 --threads 2 --report " + (dir / "s.csv")) == 0);
  CHECK(ReadFile(dir / "s.csv").find("std,") != std::string::npos);
  CHECK(Run("frobnicate") == 1);

  // Random pruning with the same seed reproduces its masks.
  const std::string rp = cfg + " --set training.pruning=random";
  CHECK(Run("train " + rp + " --out " + (dir / "rp1")) == 0);
  CHECK(Run("train " + rp + " --out " + (dir / "rp2")) == 0);
  CHECK(ReadFile(dir / "rp1/small_masks.json") == ReadFile(dir / "rp2/small_masks.json"));
  CHECK(!std::filesystem::exists(dir / "rp1/small_dense.json"));
}
