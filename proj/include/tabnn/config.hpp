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

// Experiment definition: one JSON file with dataset, architecture,
// training and output sections.

#ifndef TABNN_CONFIG_HPP
#define TABNN_CONFIG_HPP

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tabnn/datasets.hpp"
#include "tabnn/model.hpp"
#include "tabnn/pipeline.hpp"

namespace tabnn {

struct DatasetConfig {
  std::string kind = "spiral";  // csv | idx | spiral

  // csv. An empty test path splits the training file.
  std::string train_path;
  std::string test_path;
  LabelColumn label_column = -1;
  int num_classes = 2;

  // idx
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;

  // spiral
  int n_per_class = 500;
  double noise_std = 0.1;
  double turns = 1.5;

  std::uint64_t seed = 1;  // generator and split
  double test_fraction = 0.2;

  friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

struct ArchitectureConfig {
  std::vector<int> widths;  // output width of each layer
  int bits = 2;
  int fan_in = 3;
  int degree = 1;
  // Layer-0 exceptions; 0 means "same as bits / fan_in".
  int input_bits = 0;
  int input_fan_in = 0;
  bool batch_norm = true;

  int InputBits() const { return input_bits > 0 ? input_bits : bits; }
  int InputFanIn() const { return input_fan_in > 0 ? input_fan_in : fan_in; }
  friend bool operator==(const ArchitectureConfig&, const ArchitectureConfig&) = default;
};

struct OutputConfig {
  std::string dir = "artifacts";
  std::string stem = "model";
  friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct PipelineConfig {
  DatasetConfig dataset;
  ArchitectureConfig architecture;
  TrainConfig training;
  OutputConfig output;

  std::vector<std::string> Violations() const;
  void Validate() const;  // throws ConfigError listing every violation
  ModelOptions Options() const;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

// `overrides` are "section.key=value" strings; values parse as JSON and
// fall back to plain strings. Malformed JSON is a ParseError; unknown keys,
// wrong types and invalid values are collected into one ConfigError.
PipelineConfig ParsePipelineConfig(std::string_view text,
                                   std::span<const std::string> overrides = {});
PipelineConfig LoadPipelineConfig(const std::string& path,
                                  std::span<const std::string> overrides = {});
std::string SerializePipelineConfig(const PipelineConfig& config);

// Per-layer configs for an input of `input_width` features.
std::vector<LayerConfig> BuildArchitecture(const ArchitectureConfig& arch, int input_width);

struct PreparedData {
  Dataset train_raw;
  Dataset test_raw;
  InputQuantizer input;
  QuantizedDataset train;
  QuantizedDataset test;
  std::vector<LayerConfig> arch;
  std::vector<std::string> warnings;

  TrainData View() const { return {&train, &test, input}; }
};

// Loads or generates the data, splits it, fits the input quantizer on the
// training split and checks the architecture against the data shape.
PreparedData PrepareData(const PipelineConfig& config);

}  // namespace tabnn

#endif  // TABNN_CONFIG_HPP
