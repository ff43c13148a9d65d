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

#include "tabnn/config.hpp"

#include <set>

#include "json.hpp"
#include "tabnn/checkpoint.hpp"
#include "tabnn/error.hpp"

namespace tabnn {

using nlohmann::json;

namespace {

// Reads typed fields from one section, recording every problem.
class SectionReader {
 public:
  SectionReader(const json& doc, std::string name, std::vector<std::string>& errors)
      : name_(std::move(name)), errors_(errors) {
    if (!doc.contains(name_)) return;
    const json& s = doc.at(name_);
    if (!s.is_object()) {
      errors_.push_back(name_ + " must be an object");
      return;
    }
    section_ = &s;
  }

  ~SectionReader() {
    if (section_ == nullptr) return;
    for (const auto& [key, value] : section_->items()) {
      if (!seen_.contains(key)) errors_.push_back(name_ + "." + key + " is not a known key");
    }
  }

  template <typename T>
  void Read(const char* key, T& out) {
    seen_.insert(key);
    if (section_ == nullptr || !section_->contains(key)) return;
    const json& v = section_->at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::invalid_argument("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw std::invalid_argument("");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_integer() && !v.is_number_unsigned()) throw std::invalid_argument("");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw std::invalid_argument("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::invalid_argument("");
      }
      out = v.get<T>();
    } catch (const std::exception&) {
      errors_.push_back(name_ + "." + key + " has the wrong type (" + v.dump() + ")");
    }
  }

  void ReadLabel(const char* key, LabelColumn& out) {
    seen_.insert(key);
    if (section_ == nullptr || !section_->contains(key)) return;
    const json& v = section_->at(key);
    if (v.is_string()) {
      out = v.get<std::string>();
    } else if (v.is_number_integer()) {
      out = v.get<int>();
    } else {
      errors_.push_back(name_ + "." + key + " must be a column name or index");
    }
  }

 private:
  std::string name_;
  std::vector<std::string>& errors_;
  const json* section_ = nullptr;
  std::set<std::string> seen_;
};

void ApplyOverride(json& doc, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) throw ConfigError("override key '" + path + "' is malformed");
    if (!node->is_object()) throw ConfigError("override '" + path + "' does not name a field");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

}  // namespace

std::vector<std::string> PipelineConfig::Violations() const {
  std::vector<std::string> v;
  const DatasetConfig& d = dataset;
  if (d.kind == "csv") {
    if (d.train_path.empty()) v.push_back("dataset.train is required for csv data");
    if (d.num_classes < 1) v.push_back("dataset.num_classes must be >= 1");
  } else if (d.kind == "idx") {
    if (d.train_images.empty() || d.train_labels.empty()) {
      v.push_back("dataset.train_images and dataset.train_labels are required for idx data");
    }
    if (d.test_images.empty() != d.test_labels.empty()) {
      v.push_back("dataset.test_images and dataset.test_labels must be given together");
    }
  } else if (d.kind == "spiral") {
    if (d.n_per_class < 1) v.push_back("dataset.n_per_class must be >= 1");
    if (!(d.noise_std >= 0.0)) v.push_back("dataset.noise_std must be >= 0");
    if (!(d.turns > 0.0)) v.push_back("dataset.turns must be > 0");
  } else {
    v.push_back("dataset.kind must be csv, idx or spiral (got '" + d.kind + "')");
  }
  if (!(d.test_fraction > 0.0 && d.test_fraction < 1.0)) {
    v.push_back("dataset.test_fraction must lie in (0, 1)");
  }

  const ArchitectureConfig& a = architecture;
  if (a.widths.empty()) v.push_back("architecture.widths must list at least one layer");
  for (std::size_t l = 0; l < a.widths.size(); ++l) {
    if (a.widths[l] < 1) {
      v.push_back("architecture.widths[" + std::to_string(l) + "] must be >= 1");
    }
  }
  if (a.bits < 1 || a.bits > 16) v.push_back("architecture.bits must lie in [1, 16]");
  if (a.fan_in < 1) v.push_back("architecture.fan_in must be >= 1");
  if (a.degree < 1) v.push_back("architecture.degree must be >= 1");
  if (a.input_bits < 0 || a.input_bits > 16) {
    v.push_back("architecture.input_bits must lie in [0, 16]");
  }
  if (a.input_fan_in < 0) v.push_back("architecture.input_fan_in must be >= 0");
  for (std::size_t l = 1; l < a.widths.size(); ++l) {
    if (a.fan_in > a.widths[l - 1] && a.widths[l - 1] >= 1) {
      v.push_back("architecture.fan_in " + std::to_string(a.fan_in) + " exceeds the width " +
                  std::to_string(a.widths[l - 1]) + " feeding layer " + std::to_string(l));
    }
  }
  for (std::size_t l = 0; l < a.widths.size(); ++l) {
    const int bits_in = l == 0 ? a.InputBits() : a.bits;
    const int f = l == 0 ? a.InputFanIn() : a.fan_in;
    if (bits_in * f > 24) {
      v.push_back("layer " + std::to_string(l) + " truth table needs " +
                  std::to_string(bits_in * f) + " address bits (limit 24)");
    }
  }

  for (const std::string& s : training.Violations()) v.push_back(s);
  if (output.dir.empty()) v.push_back("output.dir must not be empty");
  if (output.stem.empty()) v.push_back("output.stem must not be empty");
  return v;
}

void PipelineConfig::Validate() const {
  const auto v = Violations();
  if (v.empty()) return;
  std::string msg = "invalid config (" + std::to_string(v.size()) + " problem" +
                    (v.size() == 1 ? "" : "s") + "):";
  for (const auto& s : v) msg += "\n  " + s;
  throw ConfigError(msg);
}

ModelOptions PipelineConfig::Options() const {
  ModelOptions o;
  o.batch_norm = architecture.batch_norm;
  return o;
}

PipelineConfig ParsePipelineConfig(std::string_view text,
                                   std::span<const std::string> overrides) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ParseError("config is not valid JSON");
  if (!doc.is_object()) throw ParseError("config must be a JSON object");
  for (const std::string& o : overrides) ApplyOverride(doc, o);

  std::vector<std::string> errors;
  for (const auto& [key, value] : doc.items()) {
    if (key != "dataset" && key != "architecture" && key != "training" && key != "output") {
      errors.push_back(key + " is not a known section");
    }
  }
  PipelineConfig c;
  {
    SectionReader r(doc, "dataset", errors);
    DatasetConfig& d = c.dataset;
    r.Read("kind", d.kind);
    r.Read("train", d.train_path);
    r.Read("test", d.test_path);
    r.ReadLabel("label_column", d.label_column);
    r.Read("num_classes", d.num_classes);
    r.Read("train_images", d.train_images);
    r.Read("train_labels", d.train_labels);
    r.Read("test_images", d.test_images);
    r.Read("test_labels", d.test_labels);
    r.Read("n_per_class", d.n_per_class);
    r.Read("noise_std", d.noise_std);
    r.Read("turns", d.turns);
    r.Read("seed", d.seed);
    r.Read("test_fraction", d.test_fraction);
  }
  {
    SectionReader r(doc, "architecture", errors);
    ArchitectureConfig& a = c.architecture;
    r.Read("widths", a.widths);
    r.Read("bits", a.bits);
    r.Read("fan_in", a.fan_in);
    r.Read("degree", a.degree);
    r.Read("input_bits", a.input_bits);
    r.Read("input_fan_in", a.input_fan_in);
    r.Read("batch_norm", a.batch_norm);
  }
  {
    SectionReader r(doc, "training", errors);
    TrainConfig& t = c.training;
    r.Read("epochs_dense", t.epochs_dense);
    r.Read("epochs_retrain", t.epochs_retrain);
    r.Read("batch_size", t.batch_size);
    r.Read("lr_max", t.lr_max);
    r.Read("lr_min", t.lr_min);
    r.Read("restart_period", t.restart_period);
    r.Read("weight_decay", t.weight_decay);
    r.Read("lambda1", t.lambda1);
    r.Read("lambda2", t.lambda2);
    r.Read("seed", t.seed);
    std::string reg = RegularizerName(t.regularizer);
    std::string prune = PruningName(t.pruning);
    r.Read("regularizer", reg);
    r.Read("pruning", prune);
    try {
      t.regularizer = RegularizerFromName(reg);
    } catch (const ConfigError& e) {
      errors.push_back(std::string("training.") + e.what());
    }
    try {
      t.pruning = PruningFromName(prune);
    } catch (const ConfigError& e) {
      errors.push_back(std::string("training.") + e.what());
    }
    r.Read("retrain_regularizer", t.retrain_regularizer);
    r.Read("mask_seed", t.mask_seed);
  }
  {
    SectionReader r(doc, "output", errors);
    r.Read("dir", c.output.dir);
    r.Read("stem", c.output.stem);
  }
  for (const std::string& s : c.Violations()) errors.push_back(s);
  if (!errors.empty()) {
    std::string msg = "invalid config (" + std::to_string(errors.size()) + " problem" +
                      (errors.size() == 1 ? "" : "s") + "):";
    for (const auto& s : errors) msg += "\n  " + s;
    throw ConfigError(msg);
  }
  return c;
}

PipelineConfig LoadPipelineConfig(const std::string& path,
                                  std::span<const std::string> overrides) {
  return ParsePipelineConfig(ReadFile(path), overrides);
}

std::string SerializePipelineConfig(const PipelineConfig& c) {
  json doc;
  const DatasetConfig& d = c.dataset;
  json ds = {{"kind", d.kind},
             {"train", d.train_path},
             {"test", d.test_path},
             {"num_classes", d.num_classes},
             {"train_images", d.train_images},
             {"train_labels", d.train_labels},
             {"test_images", d.test_images},
             {"test_labels", d.test_labels},
             {"n_per_class", d.n_per_class},
             {"noise_std", d.noise_std},
             {"turns", d.turns},
             {"seed", d.seed},
             {"test_fraction", d.test_fraction}};
  if (const auto* name = std::get_if<std::string>(&d.label_column)) {
    ds["label_column"] = *name;
  } else {
    ds["label_column"] = std::get<int>(d.label_column);
  }
  doc["dataset"] = ds;

  const ArchitectureConfig& a = c.architecture;
  doc["architecture"] = {{"widths", a.widths},
                         {"bits", a.bits},
                         {"fan_in", a.fan_in},
                         {"degree", a.degree},
                         {"input_bits", a.input_bits},
                         {"input_fan_in", a.input_fan_in},
                         {"batch_norm", a.batch_norm}};
  const TrainConfig& t = c.training;
  doc["training"] = {{"epochs_dense", t.epochs_dense},
                     {"epochs_retrain", t.epochs_retrain},
                     {"batch_size", t.batch_size},
                     {"lr_max", t.lr_max},
                     {"lr_min", t.lr_min},
                     {"restart_period", t.restart_period},
                     {"weight_decay", t.weight_decay},
                     {"lambda1", t.lambda1},
                     {"lambda2", t.lambda2},
                     {"seed", t.seed},
                     {"regularizer", RegularizerName(t.regularizer)},
                     {"pruning", PruningName(t.pruning)},
                     {"retrain_regularizer", t.retrain_regularizer},
                     {"mask_seed", t.mask_seed}};
  doc["output"] = {{"dir", c.output.dir}, {"stem", c.output.stem}};
  return doc.dump(2) + "\n";
}

std::vector<LayerConfig> BuildArchitecture(const ArchitectureConfig& a, int input_width) {
  std::vector<LayerConfig> arch;
  int in = input_width;
  for (std::size_t l = 0; l < a.widths.size(); ++l) {
    LayerConfig c;
    c.in_width = in;
    c.out_width = a.widths[l];
    c.fan_in = l == 0 ? a.InputFanIn() : a.fan_in;
    c.degree = a.degree;
    c.in_bits = l == 0 ? a.InputBits() : a.bits;
    c.out_bits = a.bits;
    arch.push_back(c);
    in = c.out_width;
  }
  ValidateArchitecture(arch);
  return arch;
}

PreparedData PrepareData(const PipelineConfig& config) {
  config.Validate();
  const DatasetConfig& d = config.dataset;
  PreparedData p;
  if (d.kind == "spiral") {
    const Dataset all = GenTwoSpirals(d.n_per_class, d.noise_std, d.turns, d.seed);
    DatasetSplit s = SplitDataset(all, d.test_fraction, d.seed);
    p.train_raw = std::move(s.train);
    p.test_raw = std::move(s.test);
  } else if (d.kind == "csv") {
    Dataset train = LoadCsv(d.train_path, d.label_column, d.num_classes);
    if (d.test_path.empty()) {
      DatasetSplit s = SplitDataset(train, d.test_fraction, d.seed);
      p.train_raw = std::move(s.train);
      p.test_raw = std::move(s.test);
    } else {
      p.train_raw = std::move(train);
      p.test_raw = LoadCsv(d.test_path, d.label_column, d.num_classes);
    }
  } else {
    Dataset train = LoadIdxImages(d.train_images, d.train_labels);
    if (d.test_images.empty()) {
      DatasetSplit s = SplitDataset(train, d.test_fraction, d.seed);
      p.train_raw = std::move(s.train);
      p.test_raw = std::move(s.test);
    } else {
      p.train_raw = std::move(train);
      p.test_raw = LoadIdxImages(d.test_images, d.test_labels);
    }
  }
  if (p.test_raw.cols != p.train_raw.cols) {
    throw ValidationError("train and test splits have different feature counts");
  }

  const int width = static_cast<int>(p.train_raw.cols);
  const int classes = p.train_raw.num_classes;
  const ArchitectureConfig& a = config.architecture;
  std::vector<std::string> problems;
  if (a.InputFanIn() > width) {
    problems.push_back("layer 0 fan-in " + std::to_string(a.InputFanIn()) +
                       " exceeds the " + std::to_string(width) + " input features");
  }
  const int out = a.widths.back();
  if (out != classes && !(out == 1 && classes == 2)) {
    problems.push_back("final width " + std::to_string(out) + " does not match the " +
                       std::to_string(classes) + " classes of the data");
  }
  if (!problems.empty()) {
    std::string msg = "architecture does not fit the data:";
    for (const auto& s : problems) msg += "\n  " + s;
    throw ConfigError(msg);
  }
  p.arch = BuildArchitecture(a, width);
  p.input = FitInputQuantizer(p.train_raw, a.InputBits());
  for (std::size_t f : p.input.constant_features) {
    p.warnings.push_back("feature " + std::to_string(f) +
                         " is constant on the training split and always maps to code 0");
  }
  for (const std::string& w : config.training.Warnings()) p.warnings.push_back(w);
  p.train = QuantizeDataset(p.train_raw, p.input);
  p.test = QuantizeDataset(p.test_raw, p.input);
  return p;
}

}  // namespace tabnn
