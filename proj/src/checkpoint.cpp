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

#include "tabnn/checkpoint.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tabnn/error.hpp"

namespace tabnn {

using json = nlohmann::json;

namespace {

const char* ActivationName(Activation a) {
  switch (a) {
    case Activation::kQuantized: return "quantized";
    case Activation::kClipped: return "clipped";
    case Activation::kIdentity: return "identity";
  }
  return "quantized";
}

Activation ActivationFromName(const std::string& s) {
  if (s == "quantized") return Activation::kQuantized;
  if (s == "clipped") return Activation::kClipped;
  if (s == "identity") return Activation::kIdentity;
  throw ParseError("unknown activation '" + s + "'");
}

json MaskToJson(const SparseMask& m) {
  json rows = json::array();
  for (std::size_t j = 0; j < m.neurons(); ++j) {
    const auto r = m.neuron(j);
    rows.push_back(std::vector<int>(r.begin(), r.end()));
  }
  return json{{"in_width", m.in_width}, {"fan_in", m.fan_in}, {"indices", rows}};
}

SparseMask MaskFromJson(const json& j) {
  SparseMask m;
  m.in_width = j.at("in_width").get<int>();
  m.fan_in = j.at("fan_in").get<int>();
  for (const auto& row : j.at("indices")) {
    const auto r = row.get<std::vector<int>>();
    if (static_cast<int>(r.size()) != m.fan_in) {
      throw ParseError("mask row length differs from fan_in");
    }
    m.indices.insert(m.indices.end(), r.begin(), r.end());
  }
  m.Validate();
  return m;
}

}  // namespace

std::string SerializeModel(const Model& model) {
  json ranges = json::array();
  for (const FeatureRange& r : model.input.ranges) ranges.push_back({r.min, r.max});
  json layers = json::array();
  for (const Layer& layer : model.layers) {
    json weights = json::array();
    for (std::size_t j = 0; j < static_cast<std::size_t>(layer.config.out_width); ++j) {
      const auto w = layer.neuron_weights(j);
      weights.push_back(std::vector<double>(w.begin(), w.end()));
    }
    layers.push_back(json{
        {"in_width", layer.config.in_width},
        {"out_width", layer.config.out_width},
        {"fan_in", layer.config.fan_in},
        {"degree", layer.config.degree},
        {"in_bits", layer.config.in_bits},
        {"out_bits", layer.config.out_bits},
        {"mask", MaskToJson(layer.mask)},
        {"weights", weights},
        {"bn_gamma", layer.bn_gamma},
        {"bn_beta", layer.bn_beta},
        {"bn_mean", layer.bn_mean},
        {"bn_var", layer.bn_var},
        {"act_scale", layer.act_scale},
    });
  }
  json doc = {
      {"format", "tabnn-checkpoint"},
      {"version", kCheckpointVersion},
      {"stage", model.stage == ModelStage::kDense ? "dense" : "sparse"},
      {"num_classes", model.num_classes},
      {"options",
       {{"batch_norm", model.options.batch_norm},
        {"activation", ActivationName(model.options.activation)},
        {"bn_eps", model.options.bn_eps},
        {"bn_momentum", model.options.bn_momentum}}},
      {"input",
       {{"bits", model.input.spec.bits},
        {"scale", model.input.spec.scale},
        {"ranges", ranges}}},
      {"layers", layers},
  };
  return doc.dump() + "\n";
}

Model ParseModel(std::string_view text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != "tabnn-checkpoint") {
      throw ParseError("not a tabnn checkpoint");
    }
    if (doc.at("version").get<int>() != kCheckpointVersion) {
      throw ParseError("unsupported checkpoint version " +
                       std::to_string(doc.at("version").get<int>()));
    }
    Model model;
    const std::string stage = doc.at("stage").get<std::string>();
    if (stage == "dense") {
      model.stage = ModelStage::kDense;
    } else if (stage == "sparse") {
      model.stage = ModelStage::kSparse;
    } else {
      throw ParseError("unknown checkpoint stage '" + stage + "'");
    }
    model.num_classes = doc.at("num_classes").get<int>();
    const json& opt = doc.at("options");
    model.options.batch_norm = opt.at("batch_norm").get<bool>();
    model.options.activation = ActivationFromName(opt.at("activation").get<std::string>());
    model.options.bn_eps = opt.at("bn_eps").get<double>();
    model.options.bn_momentum = opt.at("bn_momentum").get<double>();
    const json& in = doc.at("input");
    model.input.spec = QuantSpec{in.at("bits").get<int>(), in.at("scale").get<double>(), false};
    for (const auto& r : in.at("ranges")) {
      model.input.ranges.push_back({r.at(0).get<double>(), r.at(1).get<double>()});
    }
    for (std::size_t c = 0; c < model.input.ranges.size(); ++c) {
      if (!(model.input.ranges[c].max > model.input.ranges[c].min)) {
        model.input.constant_features.push_back(c);
      }
    }
    for (const auto& jl : doc.at("layers")) {
      Layer layer;
      layer.config.in_width = jl.at("in_width").get<int>();
      layer.config.out_width = jl.at("out_width").get<int>();
      layer.config.fan_in = jl.at("fan_in").get<int>();
      layer.config.degree = jl.at("degree").get<int>();
      layer.config.in_bits = jl.at("in_bits").get<int>();
      layer.config.out_bits = jl.at("out_bits").get<int>();
      layer.config.Validate();
      layer.mask = MaskFromJson(jl.at("mask"));
      layer.basis = EnumerateMonomials(layer.config.fan_in, layer.config.degree);
      for (const auto& row : jl.at("weights")) {
        const auto w = row.get<std::vector<double>>();
        if (w.size() != layer.terms()) {
          throw ParseError("weight row length differs from the basis size");
        }
        layer.weights.insert(layer.weights.end(), w.begin(), w.end());
      }
      layer.bn_gamma = jl.at("bn_gamma").get<std::vector<double>>();
      layer.bn_beta = jl.at("bn_beta").get<std::vector<double>>();
      layer.bn_mean = jl.at("bn_mean").get<std::vector<double>>();
      layer.bn_var = jl.at("bn_var").get<std::vector<double>>();
      layer.act_scale = jl.at("act_scale").get<double>();
      model.layers.push_back(std::move(layer));
    }
    model.Validate();
    return model;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw ParseError(std::string("inconsistent checkpoint: ") + e.what());
  }
}

void SaveModel(const Model& model, const std::string& path) {
  WriteFile(path, SerializeModel(model));
}

Model LoadModel(const std::string& path) { return ParseModel(ReadFile(path)); }

std::string Fnv1a64Hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string ModelHash(const Model& model) {
  return Fnv1a64Hex(SerializeModel(model));
}

std::string SerializeMasks(const std::vector<SparseMask>& masks) {
  json layers = json::array();
  for (const SparseMask& m : masks) layers.push_back(MaskToJson(m));
  const json doc = {{"format", "tabnn-masks"},
                    {"version", kCheckpointVersion},
                    {"layers", layers}};
  return doc.dump() + "\n";
}

std::vector<SparseMask> ParseMasks(std::string_view text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != "tabnn-masks") {
      throw ParseError("not a tabnn mask file");
    }
    std::vector<SparseMask> masks;
    for (const auto& jl : doc.at("layers")) masks.push_back(MaskFromJson(jl));
    return masks;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed mask file: ") + e.what());
  } catch (const ConfigError& e) {
    throw ParseError(std::string("invalid mask file: ") + e.what());
  }
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failure on " + path);
  return ss.str();
}

void WriteFile(const std::string& path, std::string_view contents) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("write failure on " + path);
}

}  // namespace tabnn
