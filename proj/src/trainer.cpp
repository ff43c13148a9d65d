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

#include "tabnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tabnn/error.hpp"

namespace tabnn {

LossResult CrossEntropy(std::span<const double> logits,
                        std::span<const int> labels, std::size_t classes) {
  const std::size_t batch = labels.size();
  if (logits.size() != batch * classes) {
    throw InternalError("CrossEntropy: logits rows differ from label count");
  }
  LossResult r;
  r.grad.assign(logits.size(), 0.0);
  if (batch == 0) return r;
  const double inv_batch = 1.0 / static_cast<double>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* row = logits.data() + b * classes;
    const double mx = *std::max_element(row, row + classes);
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) sum += std::exp(row[c] - mx);
    const double log_z = mx + std::log(sum);
    const auto label = static_cast<std::size_t>(labels[b]);
    r.loss += log_z - row[label];
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = std::exp(row[c] - log_z);
      r.grad[b * classes + c] = (p - (c == label ? 1.0 : 0.0)) * inv_batch;
    }
  }
  r.loss *= inv_batch;
  return r;
}

LossResult HwGroupRegularizer(std::span<const double> weights,
                              std::size_t group_size, double lambda1,
                              double lambda2) {
  if (!(lambda2 > 0.0)) {
    throw ConfigError("hardware-aware regularizer needs lambda2 > 0");
  }
  if (group_size == 0 || weights.size() % group_size != 0) {
    throw InternalError("HwGroupRegularizer: weights are not whole groups");
  }
  LossResult r;
  r.grad.assign(weights.size(), 0.0);
  const double log_base = std::log(lambda2);
  for (std::size_t g = 0; g < weights.size() / group_size; ++g) {
    const auto group = weights.subspan(g * group_size, group_size);
    double l1 = 0.0;
    for (double w : group) l1 += std::abs(w);
    const double term = lambda1 * std::pow(lambda2, l1);
    r.loss += term;
    const double slope = term * log_base;
    for (std::size_t k = 0; k < group_size; ++k) {
      const double w = group[k];
      const double sign = w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0);
      r.grad[g * group_size + k] = slope * sign;
    }
  }
  return r;
}

LossResult GroupLasso(std::span<const double> weights, std::size_t group_size,
                      double lambda) {
  if (group_size == 0 || weights.size() % group_size != 0) {
    throw InternalError("GroupLasso: weights are not whole groups");
  }
  LossResult r;
  r.grad.assign(weights.size(), 0.0);
  for (std::size_t g = 0; g < weights.size() / group_size; ++g) {
    double sq = 0.0;
    for (std::size_t k = 0; k < group_size; ++k) {
      const double w = weights[g * group_size + k];
      sq += w * w;
      r.grad[g * group_size + k] = 2.0 * lambda * w;
    }
    r.loss += lambda * sq;
  }
  return r;
}

void AdamWStep(std::span<double> params, std::span<const double> grads,
               AdamState& state, double lr, double weight_decay,
               const AdamHyper& hyper) {
  if (grads.size() != params.size()) {
    throw InternalError("AdamWStep: gradient shape mismatch");
  }
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  } else if (state.m.size() != params.size()) {
    throw InternalError("AdamWStep: optimizer state shape mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * grads[i];
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] = params[i] - lr * weight_decay * params[i] -
                lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
  }
}

double CosineWarmRestarts(double epoch, double lr_max, double lr_min, int period) {
  if (period < 1) throw ConfigError("restart period must be >= 1");
  const double t = std::fmod(epoch, static_cast<double>(period));
  return lr_min + 0.5 * (lr_max - lr_min) *
                      (1.0 + std::cos(std::numbers::pi * t / static_cast<double>(period)));
}

}  // namespace tabnn
