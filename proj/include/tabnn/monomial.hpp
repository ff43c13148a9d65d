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

#ifndef TABNN_MONOMIAL_HPP
#define TABNN_MONOMIAL_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tabnn {

// One non-trivial factor x[var]^power of a monomial.
struct MonomialFactor {
  int var;
  int power;
  friend bool operator==(const MonomialFactor&, const MonomialFactor&) = default;
};

// All monomials of total degree <= degree over fan_in variables, in
// graded-lexicographic order: grouped by ascending total degree, and within a
// degree by descending exponent vector. The constant monomial comes first.
// For F = 2, D = 2 this is [1, x0, x1, x0^2, x0 x1, x1^2].
struct MonomialBasis {
  int fan_in = 0;
  int degree = 0;
  std::vector<std::vector<int>> exponents;
  // Sparse form of `exponents`: the non-zero entries, in variable order.
  std::vector<std::vector<MonomialFactor>> factors;

  std::size_t size() const { return exponents.size(); }
};

// C(F + D, D), the number of monomials of degree <= D in F variables.
std::uint64_t MonomialCount(int fan_in, int degree);

MonomialBasis EnumerateMonomials(int fan_in, int degree);

// out[j] = prod_k x[k]^exponents[j][k]; out[0] == 1.
void ExpandFeatures(std::span<const double> x, const MonomialBasis& basis,
                    std::span<double> out);
std::vector<double> ExpandFeatures(std::span<const double> x,
                                   const MonomialBasis& basis);

// Accumulates d(sum_j grad_m[j] * m_j(x)) / dx into grad_x.
void ExpandFeaturesBackward(std::span<const double> x,
                            const MonomialBasis& basis,
                            std::span<const double> grad_m,
                            std::span<double> grad_x);

}  // namespace tabnn

#endif  // TABNN_MONOMIAL_HPP
