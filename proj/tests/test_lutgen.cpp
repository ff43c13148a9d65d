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


#include <algorithm>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "tabnn/checkpoint.hpp"
#include "tabnn/error.hpp"
#include "tabnn/lutgen.hpp"
#include "test_util.hpp"

using namespace tabnn;
using tabnn::testing::Arch;
using tabnn::testing::RandomModel;
using tabnn::testing::TempDir;

namespace {

// Hand-built single-neuron netlist with a known table.
Netlist TinyNetlist(int in_bits, int fan_in, int out_bits, std::vector<std::uint32_t> entries) {
  Netlist net;
  net.model_hash = "0123456789abcdef";
  net.num_classes = 2;
  net.input_width = fan_in;
  NetlistLayer layer;
  layer.in_spec = QuantSpec{in_bits, 1.0, false};
  layer.out_spec = QuantSpec{out_bits, 2.0, false};
  NetlistNode node;
  for (int i = 0; i < fan_in; ++i) node.inputs.push_back(i);
  node.table = NeuronTruthTable{in_bits, fan_in, out_bits, std::move(entries)};
  layer.nodes.push_back(node);
  net.layers.push_back(layer);
  return net;
}

std::string GoldenDir() { return std::string(TABNN_SOURCE_DIR) + "/tests/golden/tiny_verilog"; }

}  // namespace

TEST_CASE("address encoding puts input 0 in the top bits") {
  const std::vector<std::int64_t> codes = {5, 0, 3};
  CHECK(EncodeAddress(codes, 3) == ((5u << 6) | 3u));
  std::vector<std::int64_t> back(3);
  DecodeAddress(EncodeAddress(codes, 3), 3, back);
  CHECK(back == codes);
}

TEST_CASE("compiled tables equal the batched eval forward") {
  const auto arch = Arch({4, 2}, 4, 3, 3);
  const Model m = RandomModel(arch, 2, 41);
  const NeuronTruthTable t = CompileNeuron(m, 0, 1);
  CHECK(t.size() == 4096);
  CHECK(t.address_bits() == 12);

  std::vector<std::int32_t> codes;
  for (std::uint64_t a = 0; a < 4096; ++a) {
    std::vector<std::int64_t> c(4);
    DecodeAddress(a, 3, c);
    for (std::int64_t v : c) codes.push_back(static_cast<std::int32_t>(v));
  }
  const ForwardPass fp = ModelForward(m, codes, 4096, Mode::kEval);
  int bad = 0;
  for (std::uint64_t a = 0; a < 4096; ++a) {
    if (t.entries[a] != static_cast<std::uint32_t>(fp.layers[0].codes[a * 2 + 1])) ++bad;
  }
  CHECK(bad == 0);
}

TEST_CASE("a zero-weight neuron compiles to a constant table") {
  Model m = RandomModel(Arch({6, 3, 2}, 3, 2, 2), 2, 42);
  auto w = m.layers[0].neuron_weights(2);
  std::fill(w.begin(), w.end(), 0.0);
  const NeuronTruthTable t = CompileNeuron(m, 0, 2);
  CHECK(std::set<std::uint32_t>(t.entries.begin(), t.entries.end()).size() == 1);
}

TEST_CASE("non-finite neurons are named in the compile error") {
  Model m = RandomModel(Arch({6, 3, 2}, 3, 2, 2), 2, 43);
  m.layers[1].weights[0] = std::numeric_limits<double>::infinity();
  m.layers[1].weights[1] = -std::numeric_limits<double>::infinity();
  CHECK_THROWS_WITH_AS(CompileNeuron(m, 1, 0), doctest::Contains("l1_n0"), CompileError);
}

TEST_CASE("table size does not depend on degree and padding keeps the table") {
  const auto arch1 = Arch({5, 4, 2}, 3, 1, 3);
  const Model m1 = RandomModel(arch1, 2, 44);
  auto arch2 = arch1;
  for (auto& c : arch2) c.degree = 2;
  Rng rng(1, RngStream::kTest);
  std::vector<SparseMask> masks;
  for (const Layer& layer : m1.layers) masks.push_back(layer.mask);
  Model m2 = MakeModel(arch2, masks, m1.input, 2, ModelStage::kSparse, m1.options, rng);
  for (std::size_t l = 0; l < m1.layers.size(); ++l) {
    Layer& dst = m2.layers[l];
    const Layer& src = m1.layers[l];
    std::fill(dst.weights.begin(), dst.weights.end(), 0.0);
    for (std::size_t j = 0; j < src.bn_gamma.size(); ++j) {
      const auto s = src.neuron_weights(j);
      std::copy(s.begin(), s.end(), dst.neuron_weights(j).begin());
    }
    dst.bn_gamma = src.bn_gamma;
    dst.bn_beta = src.bn_beta;
    dst.bn_mean = src.bn_mean;
    dst.bn_var = src.bn_var;
    dst.act_scale = src.act_scale;
  }
  const Netlist a = BuildNetlist(m1), b = BuildNetlist(m2);
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    for (std::size_t j = 0; j < a.layers[l].nodes.size(); ++j) {
      CHECK(a.layers[l].nodes[j].table == b.layers[l].nodes[j].table);
    }
  }
}

TEST_CASE("netlist structure") {
  const Model lite = RandomModel(Arch({16, 64, 32, 5}, 4, 1, 3), 5, 45);
  const Netlist net = BuildNetlist(lite, 4);
  CHECK(net.layers.size() == 3);
  CHECK(net.node_count() == 101);
  CHECK(net == BuildNetlist(lite, 1));
  CHECK(net.model_hash == ModelHash(lite));

  const Model one = RandomModel(Arch({3, 1}, 2, 2, 2), 2, 46);
  CHECK(BuildNetlist(one).node_count() == 1);

  Rng rng(47, RngStream::kTest);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> widths = {static_cast<int>(2 + rng.Below(6))};
    const int depth = static_cast<int>(1 + rng.Below(4));
    for (int l = 0; l < depth; ++l) widths.push_back(static_cast<int>(1 + rng.Below(8)));
    const int classes = std::max(widths.back(), 2);
    if (widths.back() == 1) widths.back() = 2;
    const Model m = RandomModel(Arch(widths, 2, 2, 2), classes, 100 + trial);
    const Netlist n = BuildNetlist(m);
    for (std::size_t l = 0; l < n.layers.size(); ++l) {
      CHECK(static_cast<int>(n.layers[l].nodes.size()) == widths[l + 1]);
      for (std::size_t j = 0; j < n.layers[l].nodes.size(); ++j) {
        const auto mask = m.layers[l].mask.neuron(j);
        CHECK(n.layers[l].nodes[j].inputs == std::vector<int>(mask.begin(), mask.end()));
      }
    }
  }

  Model dense = lite;
  dense.stage = ModelStage::kDense;
  CHECK_THROWS_AS(BuildNetlist(dense), CompileError);

  Netlist broken = net;
  broken.layers[1].nodes[3].inputs[0] = 64;
  CHECK_THROWS_AS(broken.Validate(), CompileError);
}

TEST_CASE("netlist IR round trip") {
  const Model m = RandomModel(Arch({6, 8, 3}, 3, 2, 3), 3, 48);
  const Netlist net = BuildNetlist(m);
  const std::string text = SerializeNetlist(net);
  CHECK(ParseNetlist(text) == net);
  CHECK(SerializeNetlist(ParseNetlist(text)) == text);
  TempDir dir;
  SaveNetlist(net, dir / "n.json");
  CHECK(LoadNetlist(dir / "n.json") == net);
  CHECK_THROWS_AS(ParseNetlist("[]"), ParseError);
  CHECK_THROWS_AS(LoadNetlist(dir / "absent.json"), IoError);
}

TEST_CASE("verilog emission") {
  SUBCASE("smallest ROM has four arms") {
    const Netlist net = TinyNetlist(1, 2, 2, {0, 1, 3, 2});
    const auto files = EmitVerilog(net);
    const auto rom = std::find_if(files.begin(), files.end(),
                                  [](const auto& f) { return f.first == "l0_n0.v"; });
    REQUIRE(rom != files.end());
    const auto arms = ParseRom(rom->second);
    CHECK(arms.size() == 4);
    CHECK(arms.at(2) == 3);
  }
  SUBCASE("golden files") {
    const Netlist net = TinyNetlist(2, 2, 2, {0, 1, 2, 3, 1, 1, 2, 3, 2, 2, 2, 3, 3, 3, 3, 3});
    const auto files = EmitVerilog(net);
    CHECK(files == EmitVerilog(net));
    std::size_t compared = 0;
    for (const auto& [name, text] : files) {
      CHECK_MESSAGE(text == ReadFile(GoldenDir() + "/" + name), name);
      ++compared;
    }
    std::size_t golden = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(GoldenDir())) {
      ++golden;
    }
    CHECK(compared == golden);
  }
  SUBCASE("case arms equal the tables") {
    const Model m = RandomModel(Arch({8, 6, 4, 3}, 3, 3, 3), 3, 49);
    const Netlist net = BuildNetlist(m);
    TempDir a, b;
    WriteVerilog(net, a.str());
    WriteVerilog(net, b.str());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      for (std::size_t j = 0; j < net.layers[l].nodes.size(); ++j) {
        const std::string file = NeuronModuleName(l, j) + ".v";
        const std::string text = ReadFile(a / file);
        CHECK(text == ReadFile(b / file));
        const auto arms = ParseRom(text);
        const auto& entries = net.layers[l].nodes[j].table.entries;
        REQUIRE(arms.size() == entries.size());
        for (std::size_t addr = 0; addr < entries.size(); ++addr) {
          CHECK(arms.at(addr) == entries[addr]);
        }
      }
    }
    CHECK(ReadFile(a / "top.v") == ReadFile(b / "top.v"));
    CHECK(ReadFile(a / "top.v").find("module tabnn_top") != std::string::npos);
  }
}

TEST_CASE("cost model") {
  CHECK(PlutPerBit(6, 6) == 1);
  CHECK(3 * PlutPerBit(6, 6) == 3);
  CHECK(3 * PlutPerBit(12, 6) == 381);
  CHECK(PlutPerBit(2, 6) == 1);
  for (int n = 1; n < 20; ++n) CHECK(PlutPerBit(n + 1, 6) >= PlutPerBit(n, 6));
  CHECK_THROWS_AS(PlutPerBit(4, 1), ConfigError);

  const Netlist tiny = TinyNetlist(3, 4, 3, std::vector<std::uint32_t>(4096, 0));
  const CostEstimate c = EstimateCost(tiny, 6);
  CHECK(c.plut_count == 381);
  CHECK(c.llut_count == 1);
  CHECK(c.latency_cycles == 1);

  const Model deep = RandomModel(Arch({6, 5, 5, 5, 5, 3}, 2, 1, 2), 3, 50);
  const Netlist net = BuildNetlist(deep);
  CHECK(EstimateCost(net).latency_cycles == 5);
  Netlist shallower = net;
  shallower.layers.pop_back();
  CHECK(EstimateCost(shallower).plut_count <= EstimateCost(net).plut_count);
  CHECK(FormatCost(EstimateCost(net)).find("5") != std::string::npos);
}

TEST_CASE("table check detects a corrupted entry") {
  const Model m = RandomModel(Arch({6, 5, 3}, 3, 2, 3), 3, 51);
  Netlist net = BuildNetlist(m);
  const TableCheck ok = CheckTables(m, net);
  CHECK(ok.mismatches == 0);
  CHECK(ok.entries_checked == (5 + 3) * 512);
  auto& e = net.layers[1].nodes[2].table.entries[100];
  e = (e + 1) % 8;
  const TableCheck bad = CheckTables(m, net);
  CHECK(bad.mismatches == 1);
  CHECK(bad.first_mismatch.find("l1_n2") != std::string::npos);
}
