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

#ifndef TABNN_DATASETS_HPP
#define TABNN_DATASETS_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tabnn/quant.hpp"

namespace tabnn {

struct FeatureRange {
  double min = 0.0;
  double max = 0.0;
  friend bool operator==(const FeatureRange&, const FeatureRange&) = default;
};

// Row-major real-valued samples with integer class labels.
struct Dataset {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> features;
  std::vector<int> labels;
  int num_classes = 0;
  // Per-feature (min, max) over this dataset's own rows. For a training split
  // this is the normalization the input quantizer is fitted on.
  std::vector<FeatureRange> feature_ranges;

  double at(std::size_t r, std::size_t c) const { return features[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return {features.data() + r * cols, cols};
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

std::vector<FeatureRange> ComputeFeatureRanges(const Dataset& d);

// Throws ValidationError if a label falls outside [0, num_classes) or the
// buffers disagree with rows/cols.
void ValidateDataset(const Dataset& d);

// Either a header name or a column index (negative counts from the end).
using LabelColumn = std::variant<std::string, int>;

// Comma-separated file, header row auto-detected when the first row has a
// non-numeric field. Features are all non-label columns in file order.
Dataset LoadCsv(const std::string& path, const LabelColumn& label_column,
                int num_classes);

// IDX (MNIST) image/label pair. Pixels are flattened row-major and scaled to
// [0, 1].
Dataset LoadIdxImages(const std::string& images_path,
                      const std::string& labels_path);

// Two intertwined spirals. For t evenly spaced on [0.25, 1], class 0 sits at
// radius t * turns and angle 2 * pi * t * turns; class 1 is the same point
// rotated by pi. Gaussian noise is added in Cartesian coordinates.
Dataset GenTwoSpirals(int n_per_class, double noise_std, double turns,
                      std::uint64_t seed);

struct DatasetSplit {
  Dataset train;
  Dataset test;
};

// Seeded shuffle then split; ranges are recomputed on each side.
DatasetSplit SplitDataset(const Dataset& d, double test_fraction,
                          std::uint64_t seed);

// Input precision plus the training-split normalization it was fitted on.
struct InputQuantizer {
  QuantSpec spec;  // unsigned, scale 1 (normalized units)
  std::vector<FeatureRange> ranges;
  // Features with max == min. They always map to code 0.
  std::vector<std::size_t> constant_features;

  friend bool operator==(const InputQuantizer&, const InputQuantizer&) = default;
};

InputQuantizer FitInputQuantizer(const Dataset& train, int bits);

struct QuantizedDataset {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int32_t> codes;
  QuantSpec input_spec;
  std::vector<int> labels;
  int num_classes = 0;

  std::span<const std::int32_t> row(std::size_t r) const {
    return {codes.data() + r * cols, cols};
  }
  friend bool operator==(const QuantizedDataset&, const QuantizedDataset&) = default;
};

// Per-feature min-max normalization followed by
// clamp(round_half_away(normalized * (2^bits - 1))).
QuantizedDataset QuantizeDataset(const Dataset& d, const InputQuantizer& q);

// Maps codes back onto raw feature units (inverse of the affine map).
Dataset DequantizeDataset(const QuantizedDataset& qd, const InputQuantizer& q);

}  // namespace tabnn

#endif  // TABNN_DATASETS_HPP
