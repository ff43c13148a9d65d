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

#include "tabnn/lutgen.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <regex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "tabnn/checkpoint.hpp"
#include "tabnn/error.hpp"
#include "tabnn/rng.hpp"

namespace tabnn {

using nlohmann::json;

namespace {

constexpr int kMaxAddressBits = 24;

std::string Hex(std::uint64_t v, int digits) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(static_cast<std::size_t>(digits), '0');
  for (int i = digits - 1; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = kDigits[v & 0xf];
    v >>= 4;
  }
  return s;
}

int HexDigits(int bits) { return std::max(1, (bits + 3) / 4); }

int HexValue(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

template <typename Fn>
void ParallelFor(std::size_t n, unsigned threads, Fn fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        (void)t;
        for (std::size_t i = next++; i < n && !failed; i = next++) {
          try {
            fn(i);
          } catch (...) {
            if (!failed.exchange(true)) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

json SpecJson(const QuantSpec& s) { return {{"bits", s.bits}, {"scale", s.scale}}; }

QuantSpec SpecFromJson(const json& j) {
  QuantSpec s;
  s.bits = j.at("bits").get<int>();
  s.scale = j.at("scale").get<double>();
  return s;
}

}  // namespace

std::uint64_t EncodeAddress(std::span<const std::int64_t> codes, int in_bits) {
  std::uint64_t a = 0;
  for (std::int64_t c : codes) a = (a << in_bits) | static_cast<std::uint64_t>(c);
  return a;
}

void DecodeAddress(std::uint64_t address, int in_bits, std::span<std::int64_t> codes) {
  const std::uint64_t mask = (std::uint64_t{1} << in_bits) - 1;
  for (std::size_t k = codes.size(); k-- > 0;) {
    codes[k] = static_cast<std::int64_t>(address & mask);
    address >>= in_bits;
  }
}

NeuronTruthTable CompileNeuron(const Model& model, std::size_t l, std::size_t j) {
  const Layer& layer = model.layers.at(l);
  NeuronTruthTable t;
  t.in_bits = model.InSpec(l).bits;
  t.fan_in = layer.config.fan_in;
  t.out_bits = layer.config.out_bits;
  if (t.address_bits() > kMaxAddressBits) {
    throw CompileError(NeuronModuleName(l, j) + ": " + std::to_string(t.address_bits()) +
                       " address bits exceed the limit of " +
                       std::to_string(kMaxAddressBits));
  }
  const QuantSpec out_spec = model.OutSpec(l);
  const std::uint64_t n = std::uint64_t{1} << t.address_bits();
  t.entries.resize(n);
  std::vector<std::int64_t> codes(static_cast<std::size_t>(t.fan_in));
  for (std::uint64_t a = 0; a < n; ++a) {
    DecodeAddress(a, t.in_bits, codes);
    const double v = NeuronPreactivation(model, l, j, codes);
    if (!std::isfinite(v)) {
      throw CompileError("non-finite value in neuron " + NeuronModuleName(l, j) +
                         " at address " + std::to_string(a));
    }
    t.entries[a] = static_cast<std::uint32_t>(QuantActForward(v, out_spec).code);
  }
  return t;
}

std::size_t Netlist::node_count() const {
  std::size_t n = 0;
  for (const NetlistLayer& l : layers) n += l.nodes.size();
  return n;
}

void Netlist::Validate() const {
  if (layers.empty()) throw CompileError("netlist has no layers");
  if (input_width < 1) throw CompileError("netlist input width must be positive");
  int prev_width = input_width;
  int prev_bits = layers.front().in_spec.bits;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const NetlistLayer& layer = layers[l];
    const std::string where = "layer " + std::to_string(l);
    if (layer.nodes.empty()) throw CompileError(where + " has no nodes");
    if (layer.in_spec.bits != prev_bits) {
      throw CompileError(where + " input bits differ from the previous layer's output bits");
    }
    for (std::size_t j = 0; j < layer.nodes.size(); ++j) {
      const NetlistNode& node = layer.nodes[j];
      const NeuronTruthTable& t = node.table;
      const std::string name = NeuronModuleName(l, j);
      if (t.in_bits != layer.in_spec.bits || t.out_bits != layer.out_spec.bits) {
        throw CompileError(name + " table widths disagree with its layer");
      }
      if (static_cast<int>(node.inputs.size()) != t.fan_in || t.fan_in < 1) {
        throw CompileError(name + " wiring does not match its fan-in");
      }
      if (t.address_bits() > kMaxAddressBits ||
          t.entries.size() != (std::size_t{1} << t.address_bits())) {
        throw CompileError(name + " table has the wrong number of entries");
      }
      for (std::size_t k = 0; k < node.inputs.size(); ++k) {
        if (node.inputs[k] < 0 || node.inputs[k] >= prev_width ||
            (k > 0 && node.inputs[k] <= node.inputs[k - 1])) {
          throw CompileError(name + " has an invalid input wire");
        }
      }
      const auto max_code = static_cast<std::uint32_t>(layer.out_spec.MaxCode());
      for (std::uint32_t e : t.entries) {
        if (e > max_code) throw CompileError(name + " has an out-of-range entry");
      }
    }
    prev_width = static_cast<int>(layer.nodes.size());
    prev_bits = layer.out_spec.bits;
  }
}

Netlist BuildNetlist(const Model& model, unsigned threads) {
  if (model.stage != ModelStage::kSparse) {
    throw CompileError("only sparse models compile; run pruning and retraining first");
  }
  model.Validate();
  Netlist net;
  net.model_hash = ModelHash(model);
  net.num_classes = model.num_classes;
  net.input_width = model.layers.front().config.in_width;

  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const Layer& layer = model.layers[l];
    NetlistLayer nl;
    nl.in_spec = model.InSpec(l);
    nl.out_spec = model.OutSpec(l);
    nl.nodes.resize(static_cast<std::size_t>(layer.config.out_width));
    for (std::size_t j = 0; j < nl.nodes.size(); ++j) {
      const auto mask = layer.mask.neuron(j);
      nl.nodes[j].inputs.assign(mask.begin(), mask.end());
      jobs.emplace_back(l, j);
    }
    net.layers.push_back(std::move(nl));
  }
  ParallelFor(jobs.size(), threads, [&](std::size_t i) {
    const auto [l, j] = jobs[i];
    net.layers[l].nodes[j].table = CompileNeuron(model, l, j);
  });
  net.Validate();
  return net;
}

std::string SerializeNetlist(const Netlist& net) {
  json doc;
  doc["format"] = "tabnn-netlist";
  doc["version"] = kNetlistVersion;
  doc["model_hash"] = net.model_hash;
  doc["num_classes"] = net.num_classes;
  doc["input_width"] = net.input_width;
  json layers = json::array();
  for (const NetlistLayer& layer : net.layers) {
    json nodes = json::array();
    for (const NetlistNode& node : layer.nodes) {
      const int digits = HexDigits(node.table.out_bits);
      std::string hex;
      hex.reserve(node.table.entries.size() * static_cast<std::size_t>(digits));
      for (std::uint32_t e : node.table.entries) hex += Hex(e, digits);
      nodes.push_back({{"inputs", node.inputs}, {"fan_in", node.table.fan_in}, {"table", hex}});
    }
    layers.push_back({{"in", SpecJson(layer.in_spec)},
                      {"out", SpecJson(layer.out_spec)},
                      {"nodes", std::move(nodes)}});
  }
  doc["layers"] = std::move(layers);
  return doc.dump() + "\n";
}

Netlist ParseNetlist(std::string_view text) {
  const json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ParseError("netlist is not valid JSON");
  Netlist net;
  try {
    if (doc.at("format").get<std::string>() != "tabnn-netlist") {
      throw ParseError("not a tabnn netlist file");
    }
    const int version = doc.at("version").get<int>();
    if (version != kNetlistVersion) {
      throw ParseError("unsupported netlist version " + std::to_string(version));
    }
    net.model_hash = doc.at("model_hash").get<std::string>();
    net.num_classes = doc.at("num_classes").get<int>();
    net.input_width = doc.at("input_width").get<int>();
    for (const json& jl : doc.at("layers")) {
      NetlistLayer layer;
      layer.in_spec = SpecFromJson(jl.at("in"));
      layer.out_spec = SpecFromJson(jl.at("out"));
      for (const json& jn : jl.at("nodes")) {
        NetlistNode node;
        node.inputs = jn.at("inputs").get<std::vector<int>>();
        node.table.in_bits = layer.in_spec.bits;
        node.table.out_bits = layer.out_spec.bits;
        node.table.fan_in = jn.at("fan_in").get<int>();
        const std::string hex = jn.at("table").get<std::string>();
        const auto digits = static_cast<std::size_t>(HexDigits(node.table.out_bits));
        if (hex.size() % digits != 0) throw ParseError("truncated table");
        node.table.entries.resize(hex.size() / digits);
        for (std::size_t i = 0; i < node.table.entries.size(); ++i) {
          std::uint32_t v = 0;
          for (std::size_t d = 0; d < digits; ++d) {
            const int h = HexValue(hex[i * digits + d]);
            if (h < 0) throw ParseError("bad hex digit in table");
            v = (v << 4) | static_cast<std::uint32_t>(h);
          }
          node.table.entries[i] = v;
        }
        layer.nodes.push_back(std::move(node));
      }
      net.layers.push_back(std::move(layer));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed netlist: ") + e.what());
  }
  try {
    net.Validate();
  } catch (const CompileError& e) {
    throw ParseError(std::string("inconsistent netlist: ") + e.what());
  }
  return net;
}

void SaveNetlist(const Netlist& netlist, const std::string& path) {
  WriteFile(path, SerializeNetlist(netlist));
}

Netlist LoadNetlist(const std::string& path) { return ParseNetlist(ReadFile(path)); }

std::string NeuronModuleName(std::size_t layer, std::size_t index) {
  return "l" + std::to_string(layer) + "_n" + std::to_string(index);
}

std::vector<std::pair<std::string, std::string>> EmitVerilog(const Netlist& net) {
  net.Validate();
  std::vector<std::pair<std::string, std::string>> files;
  const char* header = "// Generated by tabnn. Do not edit.\n";

  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const NetlistLayer& layer = net.layers[l];
    for (std::size_t j = 0; j < layer.nodes.size(); ++j) {
      const NeuronTruthTable& t = layer.nodes[j].table;
      const std::string name = NeuronModuleName(l, j);
      const int ab = t.address_bits();
      const int adig = HexDigits(ab);
      const int odig = HexDigits(t.out_bits);
      std::string s;
      s.reserve(t.entries.size() * static_cast<std::size_t>(adig + odig + 24) + 256);
      s += header;
      s += "module " + name + " (\n  input clk,\n  input [" + std::to_string(ab - 1) +
           ":0] addr,\n  output reg [" + std::to_string(t.out_bits - 1) + ":0] out\n);\n";
      s += "  always @(posedge clk) begin\n    case (addr)\n";
      const std::string aw = std::to_string(ab) + "'h";
      const std::string ow = std::to_string(t.out_bits) + "'h";
      for (std::size_t a = 0; a < t.entries.size(); ++a) {
        s += "      " + aw + Hex(a, adig) + ": out <= " + ow + Hex(t.entries[a], odig) + ";\n";
      }
      s += "    endcase\n  end\nendmodule\n";
      files.emplace_back(name + ".v", std::move(s));
    }

    const int in_bits = layer.in_spec.bits;
    const int out_bits = layer.out_spec.bits;
    const int in_width = l == 0 ? net.input_width : static_cast<int>(net.layers[l - 1].nodes.size());
    const auto out_width = static_cast<int>(layer.nodes.size());
    std::ostringstream s;
    s << header;
    s << "module layer" << l << " (\n  input clk,\n  input [" << in_width * in_bits - 1
      << ":0] in,\n  output [" << out_width * out_bits - 1 << ":0] out\n);\n";
    for (std::size_t j = 0; j < layer.nodes.size(); ++j) {
      s << "  " << NeuronModuleName(l, j) << " u_n" << j << " (.clk(clk), .addr({";
      const auto& inputs = layer.nodes[j].inputs;
      for (std::size_t k = 0; k < inputs.size(); ++k) {
        if (k > 0) s << ", ";
        const int lo = inputs[k] * in_bits;
        s << "in[" << lo + in_bits - 1 << ":" << lo << "]";
      }
      const auto lo = static_cast<int>(j) * out_bits;
      s << "}), .out(out[" << lo + out_bits - 1 << ":" << lo << "]));\n";
    }
    s << "endmodule\n";
    files.emplace_back("layer" + std::to_string(l) + ".v", s.str());
  }

  std::ostringstream s;
  s << header;
  const int in_total = net.input_width * net.layers.front().in_spec.bits;
  const int out_total = net.output_width() * net.layers.back().out_spec.bits;
  s << "// Latency: " << net.layers.size() << " cycles. Input i occupies bits [i*"
    << net.layers.front().in_spec.bits << " +: " << net.layers.front().in_spec.bits << "].\n";
  s << "module tabnn_top (\n  input clk,\n  input [" << in_total - 1 << ":0] in,\n  output ["
    << out_total - 1 << ":0] out\n);\n";
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const int w = static_cast<int>(net.layers[l].nodes.size()) * net.layers[l].out_spec.bits;
    s << "  wire [" << w - 1 << ":0] act" << l << ";\n";
  }
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    s << "  layer" << l << " u_layer" << l << " (.clk(clk), .in("
      << (l == 0 ? std::string("in") : "act" + std::to_string(l - 1)) << "), .out(act" << l
      << "));\n";
  }
  s << "  assign out = act" << net.layers.size() - 1 << ";\nendmodule\n";
  files.emplace_back("top.v", s.str());
  return files;
}

void WriteVerilog(const Netlist& netlist, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
  for (const auto& [name, text] : EmitVerilog(netlist)) {
    WriteFile((std::filesystem::path(out_dir) / name).string(), text);
  }
}

std::map<std::uint64_t, std::uint64_t> ParseRom(std::string_view verilog) {
  static const std::regex kArm(R"(^\s*(\d+)'h([0-9a-fA-F]+)\s*:\s*out\s*<=\s*(\d+)'h([0-9a-fA-F]+)\s*;\s*$)");
  std::map<std::uint64_t, std::uint64_t> rom;
  std::istringstream in{std::string(verilog)};
  std::string line;
  std::smatch m;
  while (std::getline(in, line)) {
    if (!std::regex_match(line, m, kArm)) continue;
    const std::uint64_t addr = std::stoull(m[2].str(), nullptr, 16);
    const std::uint64_t value = std::stoull(m[4].str(), nullptr, 16);
    if (!rom.emplace(addr, value).second) {
      throw ParseError("duplicate case arm " + m[2].str());
    }
  }
  return rom;
}

std::uint64_t PlutPerBit(int n, int k) {
  if (k < 2) throw ConfigError("P-LUT size k must be >= 2");
  if (n <= k) return 1;
  return (std::uint64_t{1} << (n - k + 1)) - 1;
}

CostEstimate EstimateCost(const Netlist& net, int k) {
  CostEstimate c;
  c.k = k;
  c.latency_cycles = static_cast<int>(net.layers.size());
  for (const NetlistLayer& layer : net.layers) {
    for (const NetlistNode& node : layer.nodes) {
      c.plut_count += static_cast<std::uint64_t>(node.table.out_bits) *
                      PlutPerBit(node.table.address_bits(), k);
      ++c.llut_count;
    }
  }
  return c;
}

std::string FormatCost(const CostEstimate& c) {
  std::ostringstream os;
  os << "L-LUTs: " << c.llut_count << "\n"
     << "P-LUTs (k=" << c.k << ", upper bound): " << c.plut_count << "\n"
     << "latency: " << c.latency_cycles << " cycles\n";
  return os.str();
}

TableCheck CheckTables(const Model& model, const Netlist& net, std::uint64_t samples,
                       std::uint64_t seed) {
  if (net.layers.size() != model.layers.size()) {
    throw CompileError("netlist and model have different depths");
  }
  TableCheck r;
  Rng rng(seed, RngStream::kTest);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& layer = model.layers[l];
    const auto in_width = static_cast<std::size_t>(layer.config.in_width);
    std::vector<std::int64_t> layer_in(in_width, 0);
    std::vector<std::int64_t> gathered(static_cast<std::size_t>(layer.config.fan_in));
    for (std::size_t j = 0; j < net.layers[l].nodes.size(); ++j) {
      const NetlistNode& node = net.layers[l].nodes[j];
      const NeuronTruthTable& t = node.table;
      const std::uint64_t n = t.entries.size();
      const bool exhaustive = t.address_bits() <= 16;
      const std::uint64_t count = exhaustive ? n : samples;
      const std::uint64_t digit = (std::uint64_t{1} << t.in_bits);
      for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t a = exhaustive ? i : rng.Below(n);
        // Place each address digit on its wire, most significant first.
        std::uint64_t rest = a;
        for (std::size_t k = node.inputs.size(); k-- > 0;) {
          layer_in[static_cast<std::size_t>(node.inputs[k])] =
              static_cast<std::int64_t>(rest % digit);
          rest /= digit;
        }
        const auto mask = layer.mask.neuron(j);
        for (std::size_t k = 0; k < mask.size(); ++k) {
          gathered[k] = layer_in[static_cast<std::size_t>(mask[k])];
        }
        const std::int64_t expect = NeuronCode(model, l, j, gathered);
        ++r.entries_checked;
        if (static_cast<std::int64_t>(t.entries[a]) != expect) {
          if (r.mismatches == 0) {
            r.first_mismatch = NeuronModuleName(l, j) + " address " + std::to_string(a) +
                               ": table " + std::to_string(t.entries[a]) + ", model " +
                               std::to_string(expect);
          }
          ++r.mismatches;
        }
      }
    }
  }
  return r;
}

}  // namespace tabnn
