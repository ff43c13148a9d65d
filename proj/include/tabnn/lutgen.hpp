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

// Truth-table compilation, the netlist IR, Verilog emission and the
// analytic cost model.

#ifndef TABNN_LUTGEN_HPP
#define TABNN_LUTGEN_HPP

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tabnn/model.hpp"
#include "tabnn/quant.hpp"

namespace tabnn {

struct NeuronTruthTable {
  int in_bits = 1;
  int fan_in = 1;
  int out_bits = 1;
  // 2^(in_bits * fan_in) output codes. Mask input 0 is the most
  // significant bit group of the address.
  std::vector<std::uint32_t> entries;

  int address_bits() const { return in_bits * fan_in; }
  std::size_t size() const { return entries.size(); }
  friend bool operator==(const NeuronTruthTable&, const NeuronTruthTable&) = default;
};

std::uint64_t EncodeAddress(std::span<const std::int64_t> codes, int in_bits);
void DecodeAddress(std::uint64_t address, int in_bits, std::span<std::int64_t> codes);

// Evaluates neuron j of layer l over every input combination. A non-finite
// pre-activation throws CompileError naming the neuron.
NeuronTruthTable CompileNeuron(const Model& model, std::size_t l, std::size_t j);

struct NetlistNode {
  std::vector<int> inputs;  // wires into the previous layer (or the inputs)
  NeuronTruthTable table;
  friend bool operator==(const NetlistNode&, const NetlistNode&) = default;
};

struct NetlistLayer {
  QuantSpec in_spec;
  QuantSpec out_spec;
  std::vector<NetlistNode> nodes;
  friend bool operator==(const NetlistLayer&, const NetlistLayer&) = default;
};

struct Netlist {
  std::string model_hash;
  int num_classes = 0;
  int input_width = 0;
  std::vector<NetlistLayer> layers;

  int output_width() const {
    return layers.empty() ? 0 : static_cast<int>(layers.back().nodes.size());
  }
  std::size_t node_count() const;
  // Throws CompileError on wiring or table-shape inconsistencies.
  void Validate() const;
  friend bool operator==(const Netlist&, const Netlist&) = default;
};

// One node per neuron in layer order; tables compiled on `threads` workers
// (0 = hardware concurrency).
Netlist BuildNetlist(const Model& model, unsigned threads = 0);

inline constexpr int kNetlistVersion = 1;
std::string SerializeNetlist(const Netlist& netlist);
Netlist ParseNetlist(std::string_view text);
void SaveNetlist(const Netlist& netlist, const std::string& path);
Netlist LoadNetlist(const std::string& path);

// Verilog sources keyed by file name: l{layer}_n{index}.v per neuron,
// layer{layer}.v per layer and top.v holding module `tabnn_top`.
std::vector<std::pair<std::string, std::string>> EmitVerilog(const Netlist& netlist);
void WriteVerilog(const Netlist& netlist, const std::string& out_dir);

std::string NeuronModuleName(std::size_t layer, std::size_t index);

// Case arms of an emitted ROM module, address -> value.
std::map<std::uint64_t, std::uint64_t> ParseRom(std::string_view verilog);

struct CostEstimate {
  std::uint64_t plut_count = 0;
  std::uint64_t llut_count = 0;
  int latency_cycles = 0;
  int k = 6;
  friend bool operator==(const CostEstimate&, const CostEstimate&) = default;
};

// Physical LUTs for one output bit of an N-input table.
std::uint64_t PlutPerBit(int n, int k);
CostEstimate EstimateCost(const Netlist& netlist, int k = 6);
std::string FormatCost(const CostEstimate& cost);

struct TableCheck {
  std::uint64_t entries_checked = 0;
  std::uint64_t mismatches = 0;
  std::string first_mismatch;  // empty when none
};

// Compares every table entry (or `samples` random addresses per neuron when
// the table exceeds 2^16 entries) with the software layer forward.
TableCheck CheckTables(const Model& model, const Netlist& netlist,
                       std::uint64_t samples = 1000000, std::uint64_t seed = 1);

}  // namespace tabnn

#endif  // TABNN_LUTGEN_HPP
