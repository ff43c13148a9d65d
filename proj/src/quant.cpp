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

#include "tabnn/quant.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tabnn/error.hpp"

namespace tabnn {

void QuantSpec::Validate() const {
  if (bits < 1 || bits > 30) {
    throw ConfigError("quantizer bits must lie in [1, 30], got " +
                      std::to_string(bits));
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ConfigError("quantizer scale must be positive and finite");
  }
}

double RoundHalfAway(double v) { return std::round(v); }

QuantResult QuantActForward(double v, const QuantSpec& spec) {
  const double step = spec.step();
  const double levels = static_cast<double>(spec.Levels());
  double q = RoundHalfAway(v / step);
  // NaN falls through to code 0; callers that care check finiteness first.
  if (!(q > 0.0)) q = 0.0;
  if (q > levels) q = levels;
  const auto code = static_cast<std::int64_t>(q);
  return {code, static_cast<double>(code) * step};
}

QuantGrad QuantActBackward(double upstream_grad, double v,
                           const QuantSpec& spec) {
  if (v < 0.0) return {0.0, 0.0};
  if (v > spec.scale) return {0.0, upstream_grad};
  const QuantResult q = QuantActForward(v, spec);
  return {upstream_grad,
          upstream_grad * static_cast<double>(q.code) /
              static_cast<double>(spec.Levels())};
}

}  // namespace tabnn
