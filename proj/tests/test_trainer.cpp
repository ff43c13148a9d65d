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
#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"
#include "tabnn/error.hpp"
#include "tabnn/pipeline.hpp"
#include "tabnn/trainer.hpp"
#include "test_util.hpp"

using namespace tabnn;
using tabnn::testing::Arch;
using tabnn::testing::UnitInput;

namespace {

double RelErr(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

// Dense single-layer model whose linear weights are the given rows.
Model DenseRows(const std::vector<std::vector<double>>& rows) {
  const int in = static_cast<int>(rows.front().size());
  const int out = static_cast<int>(rows.size());
  const std::vector<LayerConfig> arch = {{in, out, in, 1, 2, 2}};
  Rng rng(1, RngStream::kTest);
  Model m = MakeModel(arch, {SparseMask::Full(out, in)}, UnitInput(in, 2), out,
                      ModelStage::kDense, {}, rng);
  for (std::size_t j = 0; j < rows.size(); ++j) {
    auto w = m.layers[0].neuron_weights(j);
    w[0] = 0.0;
    std::copy(rows[j].begin(), rows[j].end(), w.begin() + 1);
  }
  return m;
}

// Input i survives when fewer than F inputs beat it: larger |w|, or equal
// |w| at a lower index.
std::vector<int> TopKOracle(const std::vector<double>& w, int f) {
  std::vector<int> keep;
  for (std::size_t i = 0; i < w.size(); ++i) {
    int beaten_by = 0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (std::abs(w[k]) > std::abs(w[i]) || (std::abs(w[k]) == std::abs(w[i]) && k < i)) {
        ++beaten_by;
      }
    }
    if (beaten_by < f) keep.push_back(static_cast<int>(i));
  }
  return keep;
}

struct SpiralData {
  QuantizedDataset train, test;
  InputQuantizer input;
  TrainData View() const { return {&train, &test, input}; }
};

SpiralData MakeSpiral(int n_per_class = 200) {
  SpiralData s;
  const DatasetSplit split = SplitDataset(GenTwoSpirals(n_per_class, 0.1, 1.5, 1), 0.2, 1);
  s.input = FitInputQuantizer(split.train, 6);
  s.train = QuantizeDataset(split.train, s.input);
  s.test = QuantizeDataset(split.test, s.input);
  return s;
}

double MeanGroupL1(const Model& m) {
  double total = 0.0;
  std::size_t groups = 0;
  for (const Layer& layer : m.layers) {
    for (std::size_t j = 0; j < layer.bn_gamma.size(); ++j) {
      const auto w = layer.neuron_weights(j);
      for (std::size_t t = 1; t < w.size(); ++t) total += std::abs(w[t]);
      ++groups;
    }
  }
  return total / static_cast<double>(groups);
}

}  // namespace

TEST_CASE("cross entropy") {
  const std::vector<double> uniform(12, 0.3);
  const std::vector<int> labels = {0, 2, 3};
  CHECK(CrossEntropy(uniform, labels, 4).loss == doctest::Approx(std::log(4.0)));
  const std::vector<double> sure = {100, 0, 0, 100};
  CHECK(CrossEntropy(sure, std::vector<int>{0, 1}, 2).loss < 1e-40);

  Rng rng(1, RngStream::kTest);
  std::vector<double> logits(15);
  for (double& v : logits) v = rng.Uniform(-2, 2);
  const std::vector<int> y = {1, 0, 2, 2, 1};
  const LossResult r = CrossEntropy(logits, y, 3);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double h = 1e-6;
    auto p = logits, m = logits;
    p[i] += h;
    m[i] -= h;
    const double fd = (CrossEntropy(p, y, 3).loss - CrossEntropy(m, y, 3).loss) / (2 * h);
    CHECK(RelErr(r.grad[i], fd) < 1e-6);
  }
}

TEST_CASE("hardware-aware regularizer") {
  const LossResult r = HwGroupRegularizer(std::vector<double>{1, -2}, 2, 0.1, 2.0);
  CHECK(r.loss == doctest::Approx(0.8).epsilon(1e-15));
  const LossResult one = HwGroupRegularizer(std::vector<double>{1, -2, 0.5, 3, 0, 1}, 2, 0.3, 1.0);
  CHECK(one.loss == 0.3 * 3);
  for (double g : one.grad) CHECK(g == 0.0);
  CHECK_THROWS_AS(HwGroupRegularizer(std::vector<double>{1}, 1, 0.1, 0.0), ConfigError);

  // Shrinking any |w| lowers the penalty when lambda2 > 1.
  std::vector<double> w = {0.5, -1.5, 2.0, 0.25};
  const double base = HwGroupRegularizer(w, 2, 0.1, 1.7).loss;
  for (std::size_t i = 0; i < w.size(); ++i) {
    auto s = w;
    s[i] *= 0.9;
    CHECK(HwGroupRegularizer(s, 2, 0.1, 1.7).loss < base);
  }
}

TEST_CASE("group lasso") {
  CHECK(GroupLasso(std::vector<double>{3, 4}, 2, 1.0).loss == 25.0);
  CHECK(GroupLasso(std::vector<double>(6, 0.0), 3, 2.0).loss == 0.0);
}

TEST_CASE("regularizer gradients match finite differences") {
  Rng rng(7, RngStream::kTest);
  int worst_hw = 0, worst_gl = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t group = 1 + rng.Below(6);
    const std::size_t n = group * (1 + rng.Below(4));
    std::vector<double> w(n);
    for (double& v : w) {
      do v = rng.Uniform(-1.5, 1.5); while (std::abs(v) <= 1e-3);
    }
    const double l1 = rng.Uniform(1e-3, 1.0), l2 = rng.Uniform(1.01, 3.0);
    const LossResult hw = HwGroupRegularizer(w, group, l1, l2);
    const LossResult gl = GroupLasso(w, group, l1);
    for (std::size_t i = 0; i < n; ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(w[i]));
      auto p = w, m = w;
      p[i] += h;
      m[i] -= h;
      const double fd_hw =
          (HwGroupRegularizer(p, group, l1, l2).loss - HwGroupRegularizer(m, group, l1, l2).loss) /
          (2 * h);
      const double fd_gl =
          (GroupLasso(p, group, l1).loss - GroupLasso(m, group, l1).loss) / (2 * h);
      if (RelErr(hw.grad[i], fd_hw) >= 1e-6) ++worst_hw;
      if (RelErr(gl.grad[i], fd_gl) >= 1e-6) ++worst_gl;
    }
  }
  CHECK(worst_hw == 0);
  CHECK(worst_gl == 0);
}

TEST_CASE("AdamW") {
  std::vector<double> w = {0.5, -2.0};
  AdamState s;
  AdamWStep(w, std::vector<double>{0, 0}, s, 0.1, 0.0);
  CHECK(w == std::vector<double>{0.5, -2.0});

  AdamState d;
  AdamWStep(w, std::vector<double>{0, 0}, d, 0.1, 0.2);
  CHECK(w[0] == doctest::Approx(0.5 * (1 - 0.02)).epsilon(1e-15));

  // Independent scalar reference.
  double ref = 1.0, m = 0.0, v = 0.0;
  std::vector<double> p = {1.0};
  AdamState st;
  const double lr = 0.01, decay = 0.05;
  for (int t = 1; t <= 3; ++t) {
    m = 0.9 * m + 0.1 * 1.0;
    v = 0.999 * v + 0.001 * 1.0;
    const double mh = m / (1 - std::pow(0.9, t));
    const double vh = v / (1 - std::pow(0.999, t));
    ref = ref - lr * decay * ref - lr * mh / (std::sqrt(vh) + 1e-8);
    AdamWStep(p, std::vector<double>{1.0}, st, lr, decay);
    CHECK(p[0] == doctest::Approx(ref).epsilon(1e-14));
  }
  CHECK(st.step == 3);
}

TEST_CASE("cosine warm restarts") {
  CHECK(CosineWarmRestarts(0, 0.1, 0.001, 10) == doctest::Approx(0.1));
  CHECK(CosineWarmRestarts(5, 0.1, 0.001, 10) == doctest::Approx(0.0505));
  CHECK(CosineWarmRestarts(10, 0.1, 0.001, 10) == doctest::Approx(0.1));
  CHECK(CosineWarmRestarts(9.99, 0.1, 0.001, 10) < 0.0011);
}

TEST_CASE("top-k pruning examples") {
  CHECK(PruneTopK(DenseRows({{0.1, -0.9, 0.5, 0.2}}), {2})[0].indices == std::vector<int>{1, 2});
  CHECK(PruneTopK(DenseRows({{0.3, -0.3, 0.3, 0.3}}), {3})[0].indices ==
        std::vector<int>{0, 1, 2});
  CHECK(PruneTopK(DenseRows({{0.1, -0.9, 0.5, 0.2}}), {4})[0].indices ==
        std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("top-k pruning against a brute-force oracle") {
  Rng rng(17, RngStream::kTest);
  int bad = 0, rescale_bad = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const int in = 2 + static_cast<int>(rng.Below(9));
    const int f = 1 + static_cast<int>(rng.Below(static_cast<std::uint64_t>(in)));
    std::vector<double> w(static_cast<std::size_t>(in));
    // Coarse values make ties common.
    for (double& v : w) v = (static_cast<double>(rng.Below(7)) - 3.0) * 0.25;
    const std::vector<int> got = PruneTopK(DenseRows({w}), {f})[0].indices;
    if (got != TopKOracle(w, f) || static_cast<int>(got.size()) != f) ++bad;
    const double c = std::ldexp(1.0, static_cast<int>(rng.Below(9)) - 4);
    auto scaled = w;
    for (double& v : scaled) v *= c;
    if (PruneTopK(DenseRows({scaled}), {f})[0].indices != got) ++rescale_bad;
  }
  CHECK(bad == 0);
  CHECK(rescale_bad == 0);
}

TEST_CASE("random masks") {
  const auto arch = Arch({32, 64, 16}, 4, 2, 2);
  const auto a = RandomMasks(arch, 1);
  CHECK(a == RandomMasks(arch, 1));
  CHECK(a[0] != RandomMasks(arch, 2)[0]);
  for (const SparseMask& m : a) {
    for (std::size_t j = 0; j < m.neurons(); ++j) {
      const auto n = m.neuron(j);
      CHECK(n.size() == 4);
      CHECK(std::set<int>(n.begin(), n.end()).size() == 4);
      CHECK(std::is_sorted(n.begin(), n.end()));
    }
  }
}

TEST_CASE("dense training") {
  const SpiralData s = MakeSpiral();
  const auto arch = Arch({2, 16, 8, 2}, 2, 3, 3, 6);
  TrainConfig cfg;
  cfg.epochs_dense = 25;
  cfg.batch_size = 32;
  cfg.lr_max = 0.02;

  SUBCASE("a larger lambda1 shrinks the groups") {
    TrainConfig off = cfg, on = cfg;
    off.lambda1 = 0.0;
    on.lambda1 = 10 * TrainConfig{}.lambda1;
    CHECK(MeanGroupL1(TrainDense(on, s.View(), arch)) <
          MeanGroupL1(TrainDense(off, s.View(), arch)));
  }
  SUBCASE("zero epochs keeps the initialization") {
    cfg.epochs_dense = 0;
    const Model m = TrainDense(cfg, s.View(), arch);
    Rng init(cfg.seed, RngStream::kDenseInit);
    std::vector<SparseMask> masks;
    for (const LayerConfig& c : DenseArchitecture(arch)) {
      masks.push_back(SparseMask::Full(c.out_width, c.in_width));
    }
    const Model fresh = MakeModel(DenseArchitecture(arch), masks, s.input, 2,
                                  ModelStage::kDense, {}, init);
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      CHECK(m.layers[l].weights == fresh.layers[l].weights);
      CHECK(m.layers[l].bn_gamma == fresh.layers[l].bn_gamma);
    }
  }
  SUBCASE("deterministic") {
    const Model a = TrainDense(cfg, s.View(), arch);
    const Model b = TrainDense(cfg, s.View(), arch);
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
      CHECK(a.layers[l].weights == b.layers[l].weights);
      CHECK(a.layers[l].bn_mean == b.layers[l].bn_mean);
    }
  }
}

TEST_CASE("retraining") {
  const SpiralData s = MakeSpiral(500);
  const auto arch = Arch({2, 32, 16, 2}, 2, 3, 3, 6);
  TrainConfig cfg;
  cfg.epochs_dense = 25;
  cfg.epochs_retrain = 120;
  cfg.restart_period = 60;
  cfg.batch_size = 32;
  cfg.lr_max = 0.02;
  cfg.lambda1 = 0.01;
  const PipelineResult r = RunPipeline(cfg, s.View(), arch);
  REQUIRE(r.dense.has_value());
  for (std::size_t l = 0; l < r.masks.size(); ++l) {
    CHECK(r.masks[l].fan_in == arch[l].fan_in);
    CHECK(r.masks[l].neurons() == static_cast<std::size_t>(arch[l].out_width));
  }
  CHECK(r.test_accuracy > ScoreAccuracy(*r.dense, s.test));
  const Model again = RetrainSparse(r.masks, cfg, s.View(), arch);
  for (std::size_t l = 0; l < again.layers.size(); ++l) {
    CHECK(again.layers[l].weights == r.sparse.layers[l].weights);
  }

  TrainConfig bad = cfg;
  bad.lr_max = 1e300;
  bad.lr_min = 1e300;
  CHECK_THROWS_AS(RunPipeline(bad, s.View(), arch), TrainingError);
}

TEST_CASE("config validation lists every violation") {
  TrainConfig c;
  c.epochs_retrain = 0;
  c.batch_size = 0;
  c.lambda2 = -1;
  CHECK(c.Violations().size() == 3);
  CHECK_THROWS_AS(c.Validate(), ConfigError);
  TrainConfig w;
  w.lambda2 = 0.8;
  CHECK(w.Warnings().size() == 1);
  CHECK(PruningFromName(PruningName(Pruning::kFixedRandom)) == Pruning::kFixedRandom);
  CHECK(RegularizerFromName(RegularizerName(Regularizer::kGroupLasso)) ==
        Regularizer::kGroupLasso);
}

TEST_CASE("seed sweep") {
  const SpiralData s = MakeSpiral();
  const auto arch = Arch({2, 8, 2}, 2, 2, 2, 6);
  TrainConfig cfg;
  cfg.epochs_dense = 3;
  cfg.epochs_retrain = 5;
  cfg.batch_size = 32;
  const std::vector<std::uint64_t> twice = {4, 4};
  const SweepReport same = SeedSweep(cfg, twice, s.View(), arch, {}, 2);
  CHECK(same.rows.size() == 2);
  CHECK(same.std == 0.0);

  const std::vector<std::uint64_t> seeds = {1, 2, 3};
  const SweepReport r = SeedSweep(cfg, seeds, s.View(), arch, {}, 3);
  CHECK(r.rows.size() == 3);
  CHECK(r == SeedSweep(cfg, seeds, s.View(), arch, {}, 1));
  CHECK(ParseSweepReport(SerializeSweepReport(r)) == r);
  CHECK_THROWS_AS(SeedSweep(cfg, std::vector<std::uint64_t>{1}, s.View(), arch), ConfigError);

  SweepReport failed = r;
  failed.rows[1].ok = false;
  failed.rows[1].error = "diverged in epoch 3";
  failed.Recompute();
  const SweepReport back = ParseSweepReport(SerializeSweepReport(failed));
  CHECK(!back.rows[1].ok);
  CHECK(back.rows[1].error == failed.rows[1].error);
  CHECK(back.rows[0] == failed.rows[0]);
  CHECK(back.mean == failed.mean);
  CHECK(back.std == failed.std);
}
