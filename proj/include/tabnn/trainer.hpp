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

#ifndef TABNN_TRAINER_HPP
#define TABNN_TRAINER_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tabnn {

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;  // same shape as the input
};

// Mean softmax cross-entropy over a batch of `labels.size()` rows of
// `classes` logits; grad = (softmax - onehot) / batch.
LossResult CrossEntropy(std::span<const double> logits,
                        std::span<const int> labels, std::size_t classes);

// Both regularizers view `weights` as consecutive groups of `group_size`
// entries, one group per neuron.

// lambda1 * sum_i lambda2^{||W_i||_1}. The gradient uses sign(0) = 0.
// Throws ConfigError when lambda2 <= 0.
LossResult HwGroupRegularizer(std::span<const double> weights,
                              std::size_t group_size, double lambda1,
                              double lambda2);

// lambda * sum_i ||W_i||_2^2, gradient 2 * lambda * w.
LossResult GroupLasso(std::span<const double> weights, std::size_t group_size,
                      double lambda);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One AdamW update with bias correction and decoupled decay:
//   w <- w - lr * decay * w - lr * m_hat / (sqrt(v_hat) + eps)
// State vectors are sized on first use.
void AdamWStep(std::span<double> params, std::span<const double> grads,
               AdamState& state, double lr, double weight_decay,
               const AdamHyper& hyper = {});

// lr_min + (lr_max - lr_min) * (1 + cos(pi * t / period)) / 2 with
// t = epoch mod period, so each period restarts at lr_max.
double CosineWarmRestarts(double epoch, double lr_max, double lr_min, int period);

}  // namespace tabnn

#endif  // TABNN_TRAINER_HPP
