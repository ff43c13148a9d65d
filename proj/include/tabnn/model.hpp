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

// Polynomial-neuron network. Every neuron gathers F inputs through its
// sparse mask, expands them into the degree-D monomial basis, takes a dot
// product with its weights (the constant monomial's weight is the bias),
// batch-normalizes, and passes the result through an unsigned learned-scale
// quantizer. A dense layer is the special case F = in_width, D = 1.

#ifndef TABNN_MODEL_HPP
#define TABNN_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tabnn/datasets.hpp"
#include "tabnn/monomial.hpp"
#include "tabnn/quant.hpp"
#include "tabnn/rng.hpp"

namespace tabnn {

struct LayerConfig {
  int in_width = 0;
  int out_width = 0;
  int fan_in = 0;
  int degree = 1;
  int in_bits = 1;
  int out_bits = 1;

  void Validate() const;
  friend bool operator==(const LayerConfig&, const LayerConfig&) = default;
};

// Exactly fan_in strictly increasing input indices per output neuron, stored
// flat (neuron-major).
struct SparseMask {
  int in_width = 0;
  int fan_in = 0;
  std::vector<int> indices;

  std::size_t neurons() const {
    return fan_in == 0 ? 0 : indices.size() / static_cast<std::size_t>(fan_in);
  }
  std::span<const int> neuron(std::size_t j) const {
    return {indices.data() + j * static_cast<std::size_t>(fan_in),
            static_cast<std::size_t>(fan_in)};
  }

  static SparseMask Full(int out_width, int in_width);
  void Validate() const;
  friend bool operator==(const SparseMask&, const SparseMask&) = default;
};

enum class Activation {
  kQuantized,  // quantized ReLU with straight-through gradients
  kClipped,    // clamp(v, 0, scale) without rounding (gradient checks)
  kIdentity,   // no activation (textbook-case tests)
};

struct ModelOptions {
  bool batch_norm = true;
  Activation activation = Activation::kQuantized;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;

  void Validate() const;
  friend bool operator==(const ModelOptions&, const ModelOptions&) = default;
};

inline constexpr double kInitialActScale = 2.0;

struct Layer {
  LayerConfig config;
  SparseMask mask;
  MonomialBasis basis;           // derived from config.fan_in / config.degree
  std::vector<double> weights;   // out_width x basis.size(), neuron-major
  std::vector<double> bn_gamma;
  std::vector<double> bn_beta;
  std::vector<double> bn_mean;   // running statistics used in eval mode
  std::vector<double> bn_var;
  double act_scale = kInitialActScale;

  std::size_t terms() const { return basis.size(); }
  std::span<const double> neuron_weights(std::size_t j) const {
    return {weights.data() + j * terms(), terms()};
  }
  std::span<double> neuron_weights(std::size_t j) {
    return {weights.data() + j * terms(), terms()};
  }
};

enum class ModelStage { kDense, kSparse };

struct Model {
  ModelOptions options;
  InputQuantizer input;
  int num_classes = 0;
  ModelStage stage = ModelStage::kSparse;
  std::vector<Layer> layers;

  // Quantizer whose codes feed layer l: the input quantizer for l = 0,
  // otherwise the producing layer's output quantizer.
  QuantSpec InSpec(std::size_t l) const;
  QuantSpec OutSpec(std::size_t l) const;
  std::vector<LayerConfig> Architecture() const;

  // Throws ConfigError on an inconsistent architecture or shape.
  void Validate() const;
};

// Checks that widths chain (layer i out_width == layer i+1 in_width) and
// every layer config is valid.
void ValidateArchitecture(const std::vector<LayerConfig>& arch);

// Weights ~ U(-1/sqrt(M), 1/sqrt(M)) over the M monomial terms; BN starts
// at identity.
Layer MakeLayer(const LayerConfig& config, SparseMask mask, Rng& rng);

Model MakeModel(const std::vector<LayerConfig>& arch,
                std::vector<SparseMask> masks, const InputQuantizer& input,
                int num_classes, ModelStage stage, const ModelOptions& options,
                Rng& rng);

enum class Mode { kTrain, kEval };

// Everything the backward pass needs from one layer, all row-major over
// the batch.
struct LayerTrace {
  std::vector<double> input;      // batch x in_width (real values consumed)
  std::vector<double> z;          // batch x out_width, polynomial output
  std::vector<double> xhat;       // normalized z
  std::vector<double> y;          // pre-activation after BN
  std::vector<double> out;        // activation output fed to the next layer
  std::vector<std::int64_t> codes;  // quantized codes (kQuantized only)
  std::vector<double> batch_mean;   // per neuron, train mode
  std::vector<double> batch_var;    // biased, train mode
  std::vector<double> inv_std;      // per neuron, whichever stats were used
};

struct ForwardPass {
  std::size_t batch = 0;
  Mode mode = Mode::kEval;
  std::vector<LayerTrace> layers;

  // Final-layer pre-quantization class scores, batch x num_classes.
  const std::vector<double>& scores() const { return layers.back().y; }
};

// `codes` is batch x input width of input codes. Train mode normalizes with
// batch statistics (batch >= 2 when BN is on); eval mode uses running stats.
ForwardPass ModelForward(const Model& model, std::span<const std::int32_t> codes,
                         std::size_t batch, Mode mode);

struct LayerGrads {
  std::vector<double> weights;
  std::vector<double> bn_gamma;
  std::vector<double> bn_beta;
  double act_scale = 0.0;
};

// Gradients of sum_b sum_c grad_scores[b, c] * scores[b, c] with respect to
// every parameter. Quantizers use the straight-through estimator.
std::vector<LayerGrads> ModelBackward(const Model& model, const ForwardPass& fp,
                                      std::span<const double> grad_scores);

void UpdateRunningStats(Model& model, const ForwardPass& fp);

// Replaces running BN statistics with exact population statistics of `data`,
// layer by layer, each layer seeing eval-mode outputs of the ones before it.
void RecalibrateBatchNorm(Model& model, const QuantizedDataset& data);

// Shifts the final layer's pre-activations by one common offset and resets its
// output scale so the pooled scores on `data` span the quantizer range.
// Argmax over real scores and the cross-entropy loss are both invariant to
// the shift.
void CalibrateOutputQuantizer(Model& model, const QuantizedDataset& data);

// --- eval-mode integer path, shared with the truth-table compiler ---

// Real-valued pre-activation of neuron j (after BN) for the given codes of
// its F masked inputs.
double NeuronPreactivation(const Model& model, std::size_t l, std::size_t j,
                           std::span<const std::int64_t> gathered_codes);

// Output code of neuron j for the codes of its F masked inputs.
std::int64_t NeuronCode(const Model& model, std::size_t l, std::size_t j,
                        std::span<const std::int64_t> gathered_codes);

// Eval-mode forward of one layer over full-width input codes.
std::vector<std::int64_t> LayerForwardCodes(const Model& model, std::size_t l,
                                            std::span<const std::int64_t> codes_in);

// Codes after every layer for one sample; result[l] has layer l's width.
std::vector<std::vector<std::int64_t>> SampleForwardCodes(
    const Model& model, std::span<const std::int32_t> input_codes);

// Index of the largest code; ties go to the lowest index.
int ArgmaxCode(std::span<const std::int64_t> codes);

// Two classes served by one output neuron: class 1 once the final
// pre-activation reaches half of the output quantizer's full scale, i.e.
// once the output code reaches 2^(bits-1).
bool IsBinaryHead(const Model& model);

// Class decision from final-layer codes, argmax or the binary threshold.
int PredictClass(std::span<const std::int64_t> final_codes, int out_bits);

// batch x num_classes logits from final scores; [0, y - scale/2] per row
// for a binary head.
std::vector<double> ClassLogits(const Model& model, std::span<const double> scores);
std::vector<double> ScoreGradFromLogits(const Model& model,
                                        std::span<const double> grad_logits);
int ArgmaxScore(std::span<const double> scores);

// Accuracy of the argmax over final-layer output codes (what the netlist
// computes).
double ModelAccuracy(const Model& model, const QuantizedDataset& data);

// Accuracy of the argmax over eval-mode real-valued scores.
double ScoreAccuracy(const Model& model, const QuantizedDataset& data);

}  // namespace tabnn

#endif  // TABNN_MODEL_HPP
