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

// Dense-train -> structured-prune -> reinitialize-and-retrain, the random
// pruning baselines, and multi-seed sweeps.

#ifndef TABNN_PIPELINE_HPP
#define TABNN_PIPELINE_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tabnn/datasets.hpp"
#include "tabnn/model.hpp"

namespace tabnn {

enum class Regularizer { kHwExponential, kGroupLasso, kNone };
enum class Pruning { kStructured, kRandom, kFixedRandom };

const char* RegularizerName(Regularizer r);
Regularizer RegularizerFromName(std::string_view s);
const char* PruningName(Pruning p);
Pruning PruningFromName(std::string_view s);

struct TrainConfig {
  int epochs_dense = 25;
  int epochs_retrain = 100;
  int batch_size = 64;
  double lr_max = 0.01;
  double lr_min = 1e-4;
  int restart_period = 50;
  double weight_decay = 0.0;
  // lambda1 scales the group penalty (lambda for group_lasso); lambda2 is
  // the exponential base.
  double lambda1 = 1e-3;
  double lambda2 = 1.5;
  std::uint64_t seed = 1;
  Regularizer regularizer = Regularizer::kHwExponential;
  Pruning pruning = Pruning::kStructured;
  // Apply the regularizer during retraining as well.
  bool retrain_regularizer = false;
  // Seed of the single mask shared across runs in fixed_random mode.
  std::uint64_t mask_seed = 0;

  // Every violated field, empty when valid.
  std::vector<std::string> Violations() const;
  void Validate() const;  // throws ConfigError listing all violations
  std::vector<std::string> Warnings() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct EpochMetrics {
  std::string stage;  // "dense" or "retrain"
  int epoch = 0;      // 1-based
  double lr = 0.0;
  double train_loss = 0.0;
  double reg_penalty = 0.0;
  // Argmax of eval-mode scores; NaN when no test split was given.
  double test_accuracy = 0.0;
};

using MetricsSink = std::function<void(const EpochMetrics&)>;

// One JSON object per line.
std::string FormatMetricsLine(const EpochMetrics& m);

struct TrainData {
  const QuantizedDataset* train = nullptr;
  const QuantizedDataset* test = nullptr;  // optional, metrics only
  InputQuantizer input;
};

// Fully connected counterpart of `arch`: fan_in = in_width and degree 1.
std::vector<LayerConfig> DenseArchitecture(const std::vector<LayerConfig>& arch);

// Stage 1. Trains the dense model with cross-entropy plus the configured
// group regularizer on every layer's linear weights (constant term excluded).
// epochs_dense = 0 leaves the initialization untouched apart from BN stats.
Model TrainDense(const TrainConfig& config, const TrainData& data,
                 const std::vector<LayerConfig>& arch,
                 const ModelOptions& options = {}, const MetricsSink& sink = {});

// Stage 2. Per neuron keeps the fan_in[l] inputs with the largest |w| over
// the linear weights; ties go to the lower input index.
std::vector<SparseMask> PruneTopK(const Model& dense, const std::vector<int>& fan_in);

// F distinct inputs per neuron drawn uniformly without replacement.
std::vector<SparseMask> RandomMasks(const std::vector<LayerConfig>& arch,
                                    std::uint64_t seed);

// Fresh seeded polynomial model over the given masks, before training.
Model InitSparse(const std::vector<SparseMask>& masks, const TrainConfig& config,
                 const TrainData& data, const std::vector<LayerConfig>& arch,
                 const ModelOptions& options = {});

// Stage 3. InitSparse followed by epochs_retrain epochs of training.
Model RetrainSparse(const std::vector<SparseMask>& masks, const TrainConfig& config,
                    const TrainData& data, const std::vector<LayerConfig>& arch,
                    const ModelOptions& options = {}, const MetricsSink& sink = {});

struct PipelineResult {
  std::optional<Model> dense;  // structured pruning only
  std::vector<SparseMask> masks;
  Model pruned;                // reinitialized sparse model before retraining
  Model sparse;                // final model
  double test_accuracy = 0.0;  // argmax over output codes; NaN without test
  double train_loss = 0.0;     // mean cross-entropy of the last epoch
};

PipelineResult RunPipeline(const TrainConfig& config, const TrainData& data,
                           const std::vector<LayerConfig>& arch,
                           const ModelOptions& options = {},
                           const MetricsSink& sink = {});

struct SweepRow {
  std::uint64_t seed = 0;
  bool ok = true;
  double test_accuracy = 0.0;
  double train_loss = 0.0;
  std::string error;

  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct SweepReport {
  std::string pruning;
  std::vector<SweepRow> rows;
  double mean = 0.0;  // over successful rows
  double std = 0.0;   // population formula over successful rows

  void Recompute();
  friend bool operator==(const SweepReport&, const SweepReport&) = default;
};

// Runs the full pipeline once per seed (config.seed replaced). Failed runs
// are kept as rows with ok = false. Needs at least two seeds.
SweepReport SeedSweep(const TrainConfig& config, std::span<const std::uint64_t> seeds,
                      const TrainData& data, const std::vector<LayerConfig>& arch,
                      const ModelOptions& options = {}, unsigned threads = 0);

// Text form: '#' header lines, a CSV block "seed,status,test_accuracy,
// train_loss,error", then "mean,..." and "std,..." footer lines.
std::string SerializeSweepReport(const SweepReport& report);
SweepReport ParseSweepReport(std::string_view text);

}  // namespace tabnn

#endif  // TABNN_PIPELINE_HPP
