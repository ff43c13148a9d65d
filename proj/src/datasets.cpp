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

#include "tabnn/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string_view>

#include "tabnn/error.hpp"
#include "tabnn/rng.hpp"

namespace tabnn {

namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> SplitCommas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(Trim(line.substr(start)));
      return out;
    }
    out.push_back(Trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

bool ParseDouble(std::string_view s, double* out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), *out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool ParseInt(std::string_view s, long long* out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), *out);
  if (res.ec == std::errc() && res.ptr == s.data() + s.size()) return true;
  // Labels written as "3.0" are accepted when integral.
  double d;
  if (ParseDouble(s, &d) && std::floor(d) == d && std::abs(d) < 1e15) {
    *out = static_cast<long long>(d);
    return true;
  }
  return false;
}

std::uint32_t ReadBigEndianU32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw ParseError("truncated IDX header in " + path);
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
         (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

}  // namespace

std::vector<FeatureRange> ComputeFeatureRanges(const Dataset& d) {
  std::vector<FeatureRange> ranges(d.cols);
  for (std::size_t c = 0; c < d.cols; ++c) {
    if (d.rows == 0) break;
    double lo = d.at(0, c);
    double hi = lo;
    for (std::size_t r = 1; r < d.rows; ++r) {
      lo = std::min(lo, d.at(r, c));
      hi = std::max(hi, d.at(r, c));
    }
    ranges[c] = {lo, hi};
  }
  return ranges;
}

void ValidateDataset(const Dataset& d) {
  if (d.num_classes < 1) {
    throw ValidationError("num_classes must be positive");
  }
  if (d.features.size() != d.rows * d.cols || d.labels.size() != d.rows) {
    throw ValidationError("dataset buffers disagree with its shape");
  }
  for (std::size_t r = 0; r < d.rows; ++r) {
    if (d.labels[r] < 0 || d.labels[r] >= d.num_classes) {
      throw ValidationError("label " + std::to_string(d.labels[r]) +
                            " at sample " + std::to_string(r) +
                            " outside [0, " + std::to_string(d.num_classes) +
                            ")");
    }
  }
}

Dataset LoadCsv(const std::string& path, const LabelColumn& label_column,
                int num_classes) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  std::vector<std::string> header;
  std::optional<std::size_t> label_index;
  std::size_t arity = 0;
  Dataset d;
  d.num_classes = num_classes;

  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    const auto fields = SplitCommas(line);

    if (first) {
      first = false;
      arity = fields.size();
      bool numeric = true;
      for (auto f : fields) {
        double v;
        if (!ParseDouble(f, &v)) numeric = false;
      }
      if (!numeric) {
        for (auto f : fields) header.emplace_back(f);
      }
      if (const auto* name = std::get_if<std::string>(&label_column)) {
        if (header.empty()) {
          throw ParseError("label column '" + *name +
                           "' requested but " + path + " has no header row");
        }
        const auto it = std::find(header.begin(), header.end(), *name);
        if (it == header.end()) {
          throw ParseError("no column named '" + *name + "' in " + path);
        }
        label_index = static_cast<std::size_t>(it - header.begin());
      } else {
        int idx = std::get<int>(label_column);
        if (idx < 0) idx += static_cast<int>(arity);
        if (idx < 0 || idx >= static_cast<int>(arity)) {
          throw ParseError("label column index out of range for " + path);
        }
        label_index = static_cast<std::size_t>(idx);
      }
      d.cols = arity - 1;
      if (!header.empty()) continue;
    }

    if (fields.size() != arity) {
      throw ParseError(path + ": row " + std::to_string(line_no) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(arity));
    }
    for (std::size_t c = 0; c < arity; ++c) {
      if (c == *label_index) {
        long long label;
        if (!ParseInt(fields[c], &label)) {
          throw ParseError(path + ": row " + std::to_string(line_no) +
                           ": label '" + std::string(fields[c]) +
                           "' is not an integer");
        }
        if (label < 0 || label >= num_classes) {
          throw ValidationError(path + ": row " + std::to_string(line_no) +
                                ": label " + std::to_string(label) +
                                " outside [0, " + std::to_string(num_classes) +
                                ")");
        }
        d.labels.push_back(static_cast<int>(label));
      } else {
        double v;
        if (!ParseDouble(fields[c], &v)) {
          throw ParseError(path + ": row " + std::to_string(line_no) +
                           ": field '" + std::string(fields[c]) +
                           "' is not numeric");
        }
        d.features.push_back(v);
      }
    }
    ++d.rows;
  }
  if (d.rows == 0) throw ParseError(path + " contains no data rows");
  d.feature_ranges = ComputeFeatureRanges(d);
  return d;
}

Dataset LoadIdxImages(const std::string& images_path,
                      const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw IoError("cannot open " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw IoError("cannot open " + labels_path);

  if (ReadBigEndianU32(img, images_path) != kIdxImageMagic) {
    throw ParseError(images_path + ": bad IDX image magic");
  }
  if (ReadBigEndianU32(lab, labels_path) != kIdxLabelMagic) {
    throw ParseError(labels_path + ": bad IDX label magic");
  }
  const std::uint32_t n_images = ReadBigEndianU32(img, images_path);
  const std::uint32_t height = ReadBigEndianU32(img, images_path);
  const std::uint32_t width = ReadBigEndianU32(img, images_path);
  const std::uint32_t n_labels = ReadBigEndianU32(lab, labels_path);
  if (n_images != n_labels) {
    throw ValidationError("IDX count mismatch: " + std::to_string(n_images) +
                          " images vs " + std::to_string(n_labels) + " labels");
  }

  Dataset d;
  d.rows = n_images;
  d.cols = std::size_t{height} * width;
  d.num_classes = 10;
  std::vector<unsigned char> pixels(d.rows * d.cols);
  img.read(reinterpret_cast<char*>(pixels.data()),
           static_cast<std::streamsize>(pixels.size()));
  if (static_cast<std::size_t>(img.gcount()) != pixels.size()) {
    throw ParseError(images_path + ": truncated image payload");
  }
  std::vector<unsigned char> labels(d.rows);
  lab.read(reinterpret_cast<char*>(labels.data()),
           static_cast<std::streamsize>(labels.size()));
  if (static_cast<std::size_t>(lab.gcount()) != labels.size()) {
    throw ParseError(labels_path + ": truncated label payload");
  }

  d.features.resize(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    d.features[i] = static_cast<double>(pixels[i]) / 255.0;
  }
  d.labels.assign(labels.begin(), labels.end());
  ValidateDataset(d);
  d.feature_ranges = ComputeFeatureRanges(d);
  return d;
}

Dataset GenTwoSpirals(int n_per_class, double noise_std, double turns,
                      std::uint64_t seed) {
  if (n_per_class < 1) throw ConfigError("n_per_class must be >= 1");
  if (!(noise_std >= 0.0)) throw ConfigError("noise_std must be >= 0");

  constexpr double kTwoPi = 6.283185307179586476925286766559;
  Rng rng(seed, RngStream::kSpiral);
  const auto n = static_cast<std::size_t>(n_per_class);
  Dataset d;
  d.rows = 2 * n;
  d.cols = 2;
  d.num_classes = 2;
  d.features.resize(d.rows * 2);
  d.labels.resize(d.rows);
  for (std::size_t i = 0; i < n; ++i) {
    const double t =
        n == 1 ? 0.25 : 0.25 + 0.75 * static_cast<double>(i) /
                                   static_cast<double>(n - 1);
    const double r = t * turns;
    const double theta = t * turns * kTwoPi;
    const double x = r * std::cos(theta);
    const double y = r * std::sin(theta);
    d.features[2 * i] = x;
    d.features[2 * i + 1] = y;
    d.features[2 * (n + i)] = -x;
    d.features[2 * (n + i) + 1] = -y;
    d.labels[i] = 0;
    d.labels[n + i] = 1;
  }
  if (noise_std > 0.0) {
    for (double& v : d.features) v += noise_std * rng.Normal();
  }
  d.feature_ranges = ComputeFeatureRanges(d);
  return d;
}

DatasetSplit SplitDataset(const Dataset& d, double test_fraction,
                          std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(d.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed, RngStream::kSplit);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.Below(i)]);
  }
  const auto n_test = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(d.rows)));
  if (n_test == 0 || n_test >= d.rows) {
    throw ConfigError("test_fraction leaves an empty split");
  }

  auto take = [&](std::size_t begin, std::size_t end) {
    Dataset out;
    out.cols = d.cols;
    out.num_classes = d.num_classes;
    for (std::size_t k = begin; k < end; ++k) {
      const auto row = d.row(order[k]);
      out.features.insert(out.features.end(), row.begin(), row.end());
      out.labels.push_back(d.labels[order[k]]);
      ++out.rows;
    }
    out.feature_ranges = ComputeFeatureRanges(out);
    return out;
  };
  return {take(n_test, d.rows), take(0, n_test)};
}

InputQuantizer FitInputQuantizer(const Dataset& train, int bits) {
  if (bits < 1) throw ConfigError("input bits must be >= 1");
  InputQuantizer q;
  q.spec = QuantSpec{bits, 1.0, false};
  q.spec.Validate();
  q.ranges = train.feature_ranges.size() == train.cols
                 ? train.feature_ranges
                 : ComputeFeatureRanges(train);
  for (std::size_t c = 0; c < q.ranges.size(); ++c) {
    if (!(q.ranges[c].max > q.ranges[c].min)) q.constant_features.push_back(c);
  }
  return q;
}

QuantizedDataset QuantizeDataset(const Dataset& d, const InputQuantizer& q) {
  if (q.ranges.size() != d.cols) {
    throw ValidationError("input quantizer fitted on " +
                          std::to_string(q.ranges.size()) +
                          " features, dataset has " + std::to_string(d.cols));
  }
  QuantizedDataset out;
  out.rows = d.rows;
  out.cols = d.cols;
  out.input_spec = q.spec;
  out.labels = d.labels;
  out.num_classes = d.num_classes;
  out.codes.resize(d.rows * d.cols);
  const double levels = static_cast<double>(q.spec.Levels());
  for (std::size_t r = 0; r < d.rows; ++r) {
    for (std::size_t c = 0; c < d.cols; ++c) {
      const FeatureRange& fr = q.ranges[c];
      std::int32_t code = 0;
      if (fr.max > fr.min) {
        const double norm = (d.at(r, c) - fr.min) / (fr.max - fr.min);
        double v = RoundHalfAway(norm * levels);
        v = std::clamp(v, 0.0, levels);
        code = static_cast<std::int32_t>(v);
      }
      out.codes[r * d.cols + c] = code;
    }
  }
  return out;
}

Dataset DequantizeDataset(const QuantizedDataset& qd, const InputQuantizer& q) {
  Dataset d;
  d.rows = qd.rows;
  d.cols = qd.cols;
  d.labels = qd.labels;
  d.num_classes = qd.num_classes;
  d.features.resize(qd.codes.size());
  const double levels = static_cast<double>(q.spec.Levels());
  for (std::size_t r = 0; r < qd.rows; ++r) {
    for (std::size_t c = 0; c < qd.cols; ++c) {
      const FeatureRange& fr = q.ranges[c];
      const double norm = static_cast<double>(qd.codes[r * qd.cols + c]) / levels;
      d.features[r * qd.cols + c] = fr.min + norm * (fr.max - fr.min);
    }
  }
  d.feature_ranges = ComputeFeatureRanges(d);
  return d;
}

}  // namespace tabnn
