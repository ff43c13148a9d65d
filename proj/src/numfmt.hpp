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

#ifndef TABNN_SRC_NUMFMT_HPP
#define TABNN_SRC_NUMFMT_HPP

#include <charconv>
#include <cmath>
#include <string>
#include <string_view>

namespace tabnn::detail {

// Shortest representation that parses back to the same double.
inline std::string FormatDouble(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline bool ParseDoubleExact(std::string_view s, double* out) {
  if (s == "nan") {
    *out = std::nan("");
    return true;
  }
  if (s == "inf" || s == "-inf") {
    *out = s[0] == '-' ? -INFINITY : INFINITY;
    return true;
  }
  const auto res = std::from_chars(s.data(), s.data() + s.size(), *out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace tabnn::detail

#endif  // TABNN_SRC_NUMFMT_HPP
