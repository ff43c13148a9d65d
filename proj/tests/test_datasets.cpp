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


#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "tabnn/checkpoint.hpp"
#include "tabnn/datasets.hpp"
#include "tabnn/error.hpp"
#include "test_util.hpp"

using namespace tabnn;
using tabnn::testing::TempDir;

namespace {

void PutBe32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

void WriteIdx(const std::string& images, const std::string& labels,
              const std::vector<std::vector<std::uint8_t>>& pixels,
              const std::vector<std::uint8_t>& ys, std::uint32_t image_magic = 0x803,
              std::size_t truncate = 0) {
  std::ofstream img(images, std::ios::binary);
  PutBe32(img, image_magic);
  PutBe32(img, static_cast<std::uint32_t>(pixels.size()));
  PutBe32(img, 28);
  PutBe32(img, 28);
  std::string payload;
  for (const auto& p : pixels) payload.append(p.begin(), p.end());
  payload.resize(payload.size() - truncate);
  img.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  std::ofstream lab(labels, std::ios::binary);
  PutBe32(lab, 0x801);
  PutBe32(lab, static_cast<std::uint32_t>(ys.size()));
  lab.write(reinterpret_cast<const char*>(ys.data()), static_cast<std::streamsize>(ys.size()));
}

std::string Csv(std::size_t rows, std::size_t features, int classes, std::uint64_t seed) {
  Rng rng(seed, RngStream::kTest);
  std::string text;
  for (std::size_t f = 0; f < features; ++f) text += "f" + std::to_string(f) + ",";
  text += "label\n";
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t f = 0; f < features; ++f) {
      text += std::to_string(rng.Uniform(-3, 3)) + ",";
    }
    text += std::to_string(r % static_cast<std::size_t>(classes)) + "\n";
  }
  return text;
}

}  // namespace

TEST_CASE("csv loading") {
  TempDir dir;
  WriteFile(dir / "jsc.csv", Csv(40, 16, 5, 1));
  const Dataset d = LoadCsv(dir / "jsc.csv", -1, 5);
  CHECK(d.rows == 40);
  CHECK(d.cols == 16);
  CHECK(d.num_classes == 5);
  CHECK(d == LoadCsv(dir / "jsc.csv", std::string("label"), 5));

  WriteFile(dir / "nid.csv", Csv(30, 49, 2, 2));
  const Dataset n = LoadCsv(dir / "nid.csv", 49, 2);
  CHECK(n.cols == 49);
  CHECK(n.num_classes == 2);

  WriteFile(dir / "mid.csv", "a,y,b\n1.5,1,2\n3,0,-4\n");
  const Dataset m = LoadCsv(dir / "mid.csv", 1, 2);
  CHECK(m.features == std::vector<double>{1.5, 2, 3, -4});
  CHECK(m.labels == std::vector<int>{1, 0});

  WriteFile(dir / "empty.csv", "");
  CHECK_THROWS_AS(LoadCsv(dir / "empty.csv", -1, 2), ParseError);
  WriteFile(dir / "ragged.csv", "1,2,0\n1,0\n");
  CHECK_THROWS_WITH_AS(LoadCsv(dir / "ragged.csv", -1, 2), doctest::Contains("row 2"), ParseError);
  WriteFile(dir / "label.csv", "1,2,0\n1,3,7\n");
  CHECK_THROWS_AS(LoadCsv(dir / "label.csv", -1, 2), ValidationError);
  CHECK_THROWS_AS(LoadCsv(dir / "missing.csv", -1, 2), IoError);
}

TEST_CASE("idx loading") {
  TempDir dir;
  std::vector<std::vector<std::uint8_t>> px(3, std::vector<std::uint8_t>(784));
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 784; ++k) px[i][k] = static_cast<std::uint8_t>((i * 7 + k) % 256);
  }
  WriteIdx(dir / "img", dir / "lab", px, {3, 9, 0});
  const Dataset d = LoadIdxImages(dir / "img", dir / "lab");
  CHECK(d.rows == 3);
  CHECK(d.cols == 784);
  CHECK(d.num_classes == 10);
  CHECK(d.labels == std::vector<int>{3, 9, 0});
  CHECK(d.at(1, 5) == doctest::Approx(12.0 / 255.0));

  WriteIdx(dir / "one_img", dir / "one_lab", {px[0]}, {4});
  CHECK(LoadIdxImages(dir / "one_img", dir / "one_lab").rows == 1);

  WriteIdx(dir / "bad_img", dir / "bad_lab", px, {3, 9, 0}, 0x802);
  CHECK_THROWS_AS(LoadIdxImages(dir / "bad_img", dir / "bad_lab"), ParseError);
  WriteIdx(dir / "tr_img", dir / "tr_lab", px, {3, 9, 0}, 0x803, 10);
  CHECK_THROWS_AS(LoadIdxImages(dir / "tr_img", dir / "tr_lab"), ParseError);
  WriteIdx(dir / "cnt_img", dir / "cnt_lab", px, {3, 9});
  CHECK_THROWS_AS(LoadIdxImages(dir / "cnt_img", dir / "cnt_lab"), ValidationError);
}

TEST_CASE("two spirals") {
  CHECK(GenTwoSpirals(100, 0.0, 1.5, 7) == GenTwoSpirals(100, 0.0, 1.5, 7));
  CHECK(GenTwoSpirals(100, 0.1, 1.5, 7) == GenTwoSpirals(100, 0.1, 1.5, 7));
  const Dataset d = GenTwoSpirals(100, 0.0, 1.5, 3);
  CHECK(d.rows == 200);
  CHECK(d.cols == 2);
  for (std::size_t i = 0; i < 100; ++i) {
    const double t = 0.25 + 0.75 * static_cast<double>(i) / 99.0;
    const double a = 2.0 * M_PI * 1.5 * t;
    CHECK(d.at(i, 0) == doctest::Approx(1.5 * t * std::cos(a)).epsilon(1e-12));
    CHECK(d.at(i, 1) == doctest::Approx(1.5 * t * std::sin(a)).epsilon(1e-12));
    CHECK(d.at(100 + i, 0) == -d.at(i, 0));
    CHECK(d.at(100 + i, 1) == -d.at(i, 1));
    CHECK(d.labels[i] == 0);
    CHECK(d.labels[100 + i] == 1);
  }
}

TEST_CASE("input quantization") {
  Dataset d;
  d.rows = 3;
  d.cols = 2;
  d.num_classes = 2;
  d.features = {0.0, 3.3, 0.5, 3.3, 1.0, 3.3};
  d.labels = {0, 1, 0};
  d.feature_ranges = ComputeFeatureRanges(d);

  const InputQuantizer q1 = FitInputQuantizer(d, 1);
  CHECK(q1.constant_features == std::vector<std::size_t>{1});
  CHECK(QuantizeDataset(d, q1).codes == std::vector<std::int32_t>{0, 0, 1, 0, 1, 0});
  const InputQuantizer q2 = FitInputQuantizer(d, 2);
  CHECK(QuantizeDataset(d, q2).codes == std::vector<std::int32_t>{0, 0, 2, 0, 3, 0});

  Dataset wide = d;
  wide.features = {1.7, 3.3, -0.5, 3.3, 1.0, 3.3};
  const auto c = QuantizeDataset(wide, q2).codes;
  CHECK(c[0] == 3);
  CHECK(c[2] == 0);

  // Requantizing dequantized codes is the identity.
  for (int bits : {1, 3, 7}) {
    const Dataset raw = GenTwoSpirals(50, 0.2, 1.5, static_cast<std::uint64_t>(bits));
    const InputQuantizer q = FitInputQuantizer(raw, bits);
    const QuantizedDataset once = QuantizeDataset(raw, q);
    CHECK(QuantizeDataset(DequantizeDataset(once, q), q) == once);
    for (std::int32_t v : once.codes) CHECK((v >= 0 && v <= (1 << bits) - 1));
  }
}

TEST_CASE("split") {
  const Dataset d = GenTwoSpirals(100, 0.1, 1.5, 1);
  const DatasetSplit a = SplitDataset(d, 0.2, 5);
  CHECK(a.train.rows == 160);
  CHECK(a.test.rows == 40);
  CHECK(a.train == SplitDataset(d, 0.2, 5).train);
  CHECK(a.train.feature_ranges == ComputeFeatureRanges(a.train));
  CHECK_THROWS_AS(SplitDataset(d, 1.0, 5), ConfigError);
}
