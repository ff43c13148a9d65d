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

// Cycle-accurate simulation of the netlist IR. Every table output is
// registered, so an L-layer netlist has a latency of L clock edges and
// accepts a new sample on every edge.

#ifndef TABNN_NETSIM_HPP
#define TABNN_NETSIM_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tabnn/datasets.hpp"
#include "tabnn/lutgen.hpp"
#include "tabnn/model.hpp"

namespace tabnn {

class Simulator {
 public:
  explicit Simulator(const Netlist& netlist);

  // Clears every register and the cycle counter.
  void Reset();

  // One rising clock edge. `input` is the sample on the input wires during
  // this cycle (nullopt for a bubble); `tag` travels with it.
  void Step(std::optional<std::span<const std::int64_t>> input, std::int64_t tag = 0);

  std::uint64_t cycle() const { return cycle_; }
  std::size_t depth() const { return regs_.size(); }
  const std::vector<std::int64_t>& bank(std::size_t layer) const { return regs_[layer]; }
  bool valid(std::size_t layer) const { return valid_[layer]; }
  std::int64_t tag(std::size_t layer) const { return tags_[layer]; }

  bool output_valid() const { return valid_.back(); }
  const std::vector<std::int64_t>& output() const { return regs_.back(); }
  std::int64_t output_tag() const { return tags_.back(); }

 private:
  void CheckInput(std::span<const std::int64_t> input) const;

  const Netlist* net_;
  std::vector<std::vector<std::int64_t>> regs_;
  std::vector<bool> valid_;
  std::vector<std::int64_t> tags_;
  std::vector<std::int64_t> zeros_;
  std::uint64_t cycle_ = 0;
};

struct SimOutput {
  std::vector<std::int64_t> codes;  // final-layer codes
  std::uint64_t cycle = 0;          // edge at which the output became valid
  // Per-layer codes, when recorded.
  std::vector<std::vector<std::int64_t>> layers;
};

struct SimResult {
  std::vector<SimOutput> outputs;  // in input order
  std::uint64_t cycles = 0;        // edges until the last output
};

// Presents the samples back to back, one per cycle, starting with cycle 1.
// Throws SimulationError when a sample's width or codes do not fit the
// netlist input.
SimResult Simulate(const Netlist& netlist, const std::vector<std::vector<std::int64_t>>& inputs,
                   bool record_layers = false);

struct Mismatch {
  std::size_t sample = 0;
  int layer = 0;
  int neuron = 0;
  std::int64_t expected = 0;
  std::int64_t got = 0;
  friend bool operator==(const Mismatch&, const Mismatch&) = default;
};

struct EquivalenceReport {
  std::string model_hash;
  std::size_t samples_checked = 0;
  std::size_t mismatch_count = 0;     // all mismatching (sample, layer, neuron)
  std::size_t mismatched_samples = 0;
  std::vector<Mismatch> mismatches;   // first `cap`, by sample, layer, neuron
  int latency_cycles = 0;             // observed; 0 when nothing was simulated
  // Table entries compared against the neuron functions (exhaustive up to
  // 16 address bits, sampled above).
  std::uint64_t table_entries_checked = 0;
  std::uint64_t table_mismatches = 0;
  std::string first_table_mismatch;
  bool pass = true;
};

// Compares every layer's codes for every sample with the software eval-mode
// forward and, with `check_tables`, every table entry with its neuron.
// Throws HashMismatchError when the netlist was compiled from a different
// checkpoint.
EquivalenceReport VerifyEquivalence(const Model& model, const Netlist& netlist,
                                    const QuantizedDataset& data, std::size_t cap = 100,
                                    bool check_tables = true);

std::string SerializeReport(const EquivalenceReport& report);

// Fraction of samples whose simulated class decision matches the label.
double NetlistAccuracy(const Netlist& netlist, const QuantizedDataset& data);

std::vector<std::vector<std::int64_t>> DatasetInputs(const QuantizedDataset& data);

}  // namespace tabnn

#endif  // TABNN_NETSIM_HPP
