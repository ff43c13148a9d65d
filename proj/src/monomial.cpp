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

#include "tabnn/monomial.hpp"

#include <string>

#include "tabnn/error.hpp"

namespace tabnn {

namespace {

// Appends every exponent vector over vars [pos, F) summing to `remaining`,
// largest leading exponent first.
void Compositions(int pos, int remaining, std::vector<int>& current,
                  std::vector<std::vector<int>>& out) {
  const int fan_in = static_cast<int>(current.size());
  if (pos == fan_in - 1) {
    current[pos] = remaining;
    out.push_back(current);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    current[pos] = e;
    Compositions(pos + 1, remaining - e, current, out);
  }
  current[pos] = 0;
}

}  // namespace

std::uint64_t MonomialCount(int fan_in, int degree) {
  // C(F+D, D) built incrementally; each partial product is itself a binomial.
  std::uint64_t c = 1;
  for (int i = 1; i <= degree; ++i) {
    c = c * static_cast<std::uint64_t>(fan_in + i) / static_cast<std::uint64_t>(i);
  }
  return c;
}

MonomialBasis EnumerateMonomials(int fan_in, int degree) {
  if (fan_in < 1 || degree < 0) {
    throw ConfigError("monomial basis needs fan_in >= 1 and degree >= 0, got F=" +
                      std::to_string(fan_in) + " D=" + std::to_string(degree));
  }
  MonomialBasis basis;
  basis.fan_in = fan_in;
  basis.degree = degree;
  basis.exponents.reserve(MonomialCount(fan_in, degree));
  std::vector<int> current(static_cast<std::size_t>(fan_in), 0);
  for (int d = 0; d <= degree; ++d) {
    Compositions(0, d, current, basis.exponents);
  }
  basis.factors.reserve(basis.exponents.size());
  for (const auto& e : basis.exponents) {
    std::vector<MonomialFactor> f;
    for (int k = 0; k < fan_in; ++k) {
      if (e[k] != 0) f.push_back({k, e[k]});
    }
    basis.factors.push_back(std::move(f));
  }
  return basis;
}

void ExpandFeatures(std::span<const double> x, const MonomialBasis& basis,
                    std::span<double> out) {
  if (x.size() != static_cast<std::size_t>(basis.fan_in) ||
      out.size() != basis.size()) {
    throw InternalError("ExpandFeatures: size mismatch");
  }
  for (std::size_t j = 0; j < basis.size(); ++j) {
    double v = 1.0;
    for (const MonomialFactor& f : basis.factors[j]) {
      double p = 1.0;
      for (int e = 0; e < f.power; ++e) p *= x[f.var];
      v *= p;
    }
    out[j] = v;
  }
}

std::vector<double> ExpandFeatures(std::span<const double> x,
                                   const MonomialBasis& basis) {
  std::vector<double> out(basis.size());
  ExpandFeatures(x, basis, out);
  return out;
}

void ExpandFeaturesBackward(std::span<const double> x,
                            const MonomialBasis& basis,
                            std::span<const double> grad_m,
                            std::span<double> grad_x) {
  for (std::size_t j = 1; j < basis.size(); ++j) {
    const double g = grad_m[j];
    if (g == 0.0) continue;
    const auto& fs = basis.factors[j];
    for (std::size_t a = 0; a < fs.size(); ++a) {
      double d = static_cast<double>(fs[a].power);
      for (int e = 1; e < fs[a].power; ++e) d *= x[fs[a].var];
      for (std::size_t b = 0; b < fs.size(); ++b) {
        if (b == a) continue;
        for (int e = 0; e < fs[b].power; ++e) d *= x[fs[b].var];
      }
      grad_x[fs[a].var] += g * d;
    }
  }
}

}  // namespace tabnn
