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

#ifndef TABNN_QUANT_HPP
#define TABNN_QUANT_HPP

#include <cstdint>

namespace tabnn {

// Uniform quantizer for one tensor role. Unsigned codes span
// [0, 2^bits - 1]; signed codes span [-2^(bits-1), 2^(bits-1) - 1]. The real
// value of a code is code * step() where step() = scale / (2^bits - 1).
struct QuantSpec {
  int bits = 1;
  double scale = 1.0;
  bool is_signed = false;

  std::int64_t MinCode() const {
    return is_signed ? -(std::int64_t{1} << (bits - 1)) : 0;
  }
  std::int64_t MaxCode() const {
    return is_signed ? (std::int64_t{1} << (bits - 1)) - 1
                     : (std::int64_t{1} << bits) - 1;
  }
  std::int64_t Levels() const { return (std::int64_t{1} << bits) - 1; }
  double step() const { return scale / static_cast<double>(Levels()); }
  double Dequantize(std::int64_t code) const {
    return static_cast<double>(code) * step();
  }
  bool InRange(std::int64_t code) const {
    return code >= MinCode() && code <= MaxCode();
  }

  // Throws ConfigError unless bits in [1, 30] and scale > 0.
  void Validate() const;

  friend bool operator==(const QuantSpec&, const QuantSpec&) = default;
};

// Round half away from zero. std::round has exactly these semantics; the
// wrapper pins the rule at one call site.
double RoundHalfAway(double v);

struct QuantResult {
  std::int64_t code;
  double dequant;
};

// Quantized-ReLU forward: code = clamp(round(v / step), 0, 2^bits - 1).
QuantResult QuantActForward(double v, const QuantSpec& spec);

struct QuantGrad {
  double grad_v;
  double grad_scale;
};

// Straight-through estimator with clipping. grad_v passes through on
// [0, scale]; grad_scale uses code / (2^bits - 1) inside the range and 1
// above it.
QuantGrad QuantActBackward(double upstream_grad, double v,
                           const QuantSpec& spec);

}  // namespace tabnn

#endif  // TABNN_QUANT_HPP
