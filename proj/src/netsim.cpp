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

#include "tabnn/netsim.hpp"

#include "json.hpp"
#include "tabnn/checkpoint.hpp"
#include "tabnn/error.hpp"

namespace tabnn {

Simulator::Simulator(const Netlist& netlist) : net_(&netlist) {
  netlist.Validate();
  for (const NetlistLayer& layer : netlist.layers) {
    regs_.emplace_back(layer.nodes.size(), 0);
  }
  valid_.assign(regs_.size(), false);
  tags_.assign(regs_.size(), 0);
  zeros_.assign(static_cast<std::size_t>(netlist.input_width), 0);
}

void Simulator::Reset() {
  for (auto& r : regs_) std::fill(r.begin(), r.end(), 0);
  std::fill(valid_.begin(), valid_.end(), false);
  std::fill(tags_.begin(), tags_.end(), 0);
  cycle_ = 0;
}

void Simulator::CheckInput(std::span<const std::int64_t> input) const {
  if (input.size() != static_cast<std::size_t>(net_->input_width)) {
    throw SimulationError("input has " + std::to_string(input.size()) +
                          " codes, the netlist expects " + std::to_string(net_->input_width));
  }
  const QuantSpec& spec = net_->layers.front().in_spec;
  for (std::size_t i = 0; i < input.size(); ++i) {
    if (!spec.InRange(input[i])) {
      throw SimulationError("input code " + std::to_string(input[i]) + " at position " +
                            std::to_string(i) + " does not fit " + std::to_string(spec.bits) +
                            " bits");
    }
  }
}

void Simulator::Step(std::optional<std::span<const std::int64_t>> input, std::int64_t tag) {
  if (input) CheckInput(*input);
  // Deepest layer first, so every bank reads its source's old value.
  for (std::size_t l = regs_.size(); l-- > 0;) {
    const NetlistLayer& layer = net_->layers[l];
    bool src_valid;
    std::int64_t src_tag;
    std::span<const std::int64_t> src;
    if (l == 0) {
      src_valid = input.has_value();
      src_tag = tag;
      if (input) src = *input;
    } else {
      src_valid = valid_[l - 1];
      src_tag = tags_[l - 1];
      src = regs_[l - 1];
    }
    // A bubble still clocks the registers, reading all-zero wires.
    if (src.empty()) src = zeros_;
    for (std::size_t j = 0; j < layer.nodes.size(); ++j) {
      const NetlistNode& node = layer.nodes[j];
      std::uint64_t addr = 0;
      for (int w : node.inputs) {
        addr = (addr << node.table.in_bits) |
               static_cast<std::uint64_t>(src[static_cast<std::size_t>(w)]);
      }
      regs_[l][j] = node.table.entries[addr];
    }
    valid_[l] = src_valid;
    tags_[l] = src_tag;
  }
  ++cycle_;
}

SimResult Simulate(const Netlist& netlist, const std::vector<std::vector<std::int64_t>>& inputs,
                   bool record_layers) {
  Simulator sim(netlist);
  SimResult result;
  result.outputs.resize(inputs.size());
  const std::size_t depth = sim.depth();
  std::size_t next = 0;
  std::size_t done = 0;
  while (done < inputs.size()) {
    if (next < inputs.size()) {
      sim.Step(std::span<const std::int64_t>(inputs[next]), static_cast<std::int64_t>(next));
      ++next;
    } else {
      sim.Step(std::nullopt);
    }
    if (record_layers) {
      for (std::size_t l = 0; l < depth; ++l) {
        if (!sim.valid(l)) continue;
        auto& layers = result.outputs[static_cast<std::size_t>(sim.tag(l))].layers;
        if (layers.size() < depth) layers.resize(depth);
        layers[l] = sim.bank(l);
      }
    }
    if (sim.output_valid()) {
      SimOutput& out = result.outputs[static_cast<std::size_t>(sim.output_tag())];
      out.codes = sim.output();
      out.cycle = sim.cycle();
      ++done;
    }
  }
  result.cycles = sim.cycle();
  return result;
}

std::vector<std::vector<std::int64_t>> DatasetInputs(const QuantizedDataset& data) {
  std::vector<std::vector<std::int64_t>> inputs(data.rows);
  for (std::size_t r = 0; r < data.rows; ++r) {
    const auto row = data.row(r);
    inputs[r].assign(row.begin(), row.end());
  }
  return inputs;
}

namespace {

void CheckCompatible(const Netlist& net, const QuantizedDataset& data) {
  if (data.rows > 0 && data.cols != static_cast<std::size_t>(net.input_width)) {
    throw SimulationError("dataset has " + std::to_string(data.cols) +
                          " features, the netlist expects " + std::to_string(net.input_width));
  }
  if (data.rows > 0 && data.input_spec.bits != net.layers.front().in_spec.bits) {
    throw SimulationError("dataset codes use " + std::to_string(data.input_spec.bits) +
                          " bits, the netlist expects " +
                          std::to_string(net.layers.front().in_spec.bits));
  }
}

}  // namespace

EquivalenceReport VerifyEquivalence(const Model& model, const Netlist& netlist,
                                    const QuantizedDataset& data, std::size_t cap,
                                    bool check_tables) {
  const std::string hash = ModelHash(model);
  if (hash != netlist.model_hash) {
    throw HashMismatchError("netlist was compiled from checkpoint " + netlist.model_hash +
                            " but the model is " + hash + "; recompile before verifying");
  }
  CheckCompatible(netlist, data);
  EquivalenceReport report;
  report.model_hash = hash;
  report.samples_checked = data.rows;
  if (check_tables) {
    const TableCheck t = CheckTables(model, netlist);
    report.table_entries_checked = t.entries_checked;
    report.table_mismatches = t.mismatches;
    report.first_table_mismatch = t.first_mismatch;
  }
  report.pass = report.table_mismatches == 0;
  if (data.rows == 0) return report;

  const SimResult sim = Simulate(netlist, DatasetInputs(data), true);
  report.latency_cycles = static_cast<int>(sim.outputs.front().cycle);
  for (std::size_t s = 0; s < data.rows; ++s) {
    const auto expected = SampleForwardCodes(model, data.row(s));
    const SimOutput& out = sim.outputs[s];
    const int latency = static_cast<int>(out.cycle - s);
    if (latency != report.latency_cycles) {
      throw InternalError("inconsistent pipeline latency at sample " + std::to_string(s));
    }
    bool sample_bad = false;
    for (std::size_t l = 0; l < expected.size(); ++l) {
      for (std::size_t j = 0; j < expected[l].size(); ++j) {
        const std::int64_t got = out.layers[l][j];
        if (got == expected[l][j]) continue;
        sample_bad = true;
        ++report.mismatch_count;
        if (report.mismatches.size() < cap) {
          report.mismatches.push_back(
              {s, static_cast<int>(l), static_cast<int>(j), expected[l][j], got});
        }
      }
    }
    if (sample_bad) ++report.mismatched_samples;
  }
  report.pass = report.mismatch_count == 0 && report.table_mismatches == 0;
  return report;
}

std::string SerializeReport(const EquivalenceReport& r) {
  nlohmann::json doc;
  doc["format"] = "tabnn-equivalence";
  doc["model_hash"] = r.model_hash;
  doc["pass"] = r.pass;
  doc["samples_checked"] = r.samples_checked;
  doc["mismatch_count"] = r.mismatch_count;
  doc["mismatched_samples"] = r.mismatched_samples;
  doc["latency_cycles"] = r.latency_cycles;
  doc["table_entries_checked"] = r.table_entries_checked;
  doc["table_mismatches"] = r.table_mismatches;
  if (!r.first_table_mismatch.empty()) doc["first_table_mismatch"] = r.first_table_mismatch;
  nlohmann::json list = nlohmann::json::array();
  for (const Mismatch& m : r.mismatches) {
    list.push_back({{"sample", m.sample},
                    {"layer", m.layer},
                    {"neuron", m.neuron},
                    {"expected", m.expected},
                    {"got", m.got}});
  }
  doc["mismatches"] = std::move(list);
  return doc.dump(2) + "\n";
}

double NetlistAccuracy(const Netlist& netlist, const QuantizedDataset& data) {
  CheckCompatible(netlist, data);
  if (data.rows == 0) return 0.0;
  const SimResult sim = Simulate(netlist, DatasetInputs(data));
  const int bits = netlist.layers.back().out_spec.bits;
  std::size_t correct = 0;
  for (std::size_t s = 0; s < data.rows; ++s) {
    if (PredictClass(sim.outputs[s].codes, bits) == data.labels[s]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.rows);
}

}  // namespace tabnn
