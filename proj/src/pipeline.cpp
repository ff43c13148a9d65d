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

#include "tabnn/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "numfmt.hpp"
#include "tabnn/error.hpp"
#include "tabnn/rng.hpp"
#include "tabnn/trainer.hpp"

namespace tabnn {

using detail::FormatDouble;

namespace {

constexpr double kMinActScale = 1e-3;

struct OptimizerState {
  std::vector<AdamState> weights, gamma, beta, scale;
  explicit OptimizerState(std::size_t layers)
      : weights(layers), gamma(layers), beta(layers), scale(layers) {}
};

// Penalty over the non-constant weights of every neuron, gradient added
// into `grads`.
double ApplyRegularizer(const Model& model, const TrainConfig& cfg,
                        std::vector<LayerGrads>& grads) {
  if (cfg.regularizer == Regularizer::kNone) return 0.0;
  double penalty = 0.0;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const Layer& layer = model.layers[l];
    const std::size_t terms = layer.terms();
    if (terms < 2) continue;
    const std::size_t group = terms - 1;
    const auto width = static_cast<std::size_t>(layer.config.out_width);
    std::vector<double> linear(width * group);
    for (std::size_t j = 0; j < width; ++j) {
      const auto w = layer.neuron_weights(j);
      std::copy(w.begin() + 1, w.end(), linear.begin() + static_cast<std::ptrdiff_t>(j * group));
    }
    const LossResult r = cfg.regularizer == Regularizer::kHwExponential
                             ? HwGroupRegularizer(linear, group, cfg.lambda1, cfg.lambda2)
                             : GroupLasso(linear, group, cfg.lambda1);
    penalty += r.loss;
    for (std::size_t j = 0; j < width; ++j) {
      for (std::size_t t = 0; t < group; ++t) {
        grads[l].weights[j * terms + t + 1] += r.grad[j * group + t];
      }
    }
  }
  return penalty;
}

// Minibatch training; returns the mean cross-entropy of the last epoch.
double TrainLoop(Model& model, const TrainConfig& cfg, int epochs, bool regularize,
                 RngStream shuffle_stream, const TrainData& data,
                 const MetricsSink& sink, const char* stage) {
  const QuantizedDataset& train = *data.train;
  const std::size_t n = train.rows;
  const bool bn = model.options.batch_norm;
  const std::size_t min_batch = bn ? 2 : 1;
  if (n < min_batch) throw ConfigError("training split is too small");
  const std::size_t bs = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), n);
  std::size_t n_batches = n / bs;
  if (n % bs >= min_batch) ++n_batches;
  const auto classes = static_cast<std::size_t>(model.num_classes);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle(cfg.seed, shuffle_stream);
  OptimizerState opt(model.layers.size());
  TrainConfig reg_cfg = cfg;
  if (!regularize) reg_cfg.regularizer = Regularizer::kNone;

  double last_loss = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::int32_t> codes;
  std::vector<int> labels;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.Below(i)]);
    double loss_sum = 0.0, penalty_sum = 0.0;
    const double epoch_lr = CosineWarmRestarts(epoch, cfg.lr_max, cfg.lr_min, cfg.restart_period);
    for (std::size_t k = 0; k < n_batches; ++k) {
      const std::size_t begin = k * bs;
      const std::size_t count = std::min(bs, n - begin);
      codes.clear();
      labels.clear();
      for (std::size_t b = 0; b < count; ++b) {
        const auto row = train.row(order[begin + b]);
        codes.insert(codes.end(), row.begin(), row.end());
        labels.push_back(train.labels[order[begin + b]]);
      }
      const double lr = CosineWarmRestarts(
          epoch + static_cast<double>(k) / static_cast<double>(n_batches),
          cfg.lr_max, cfg.lr_min, cfg.restart_period);

      const ForwardPass fp = ModelForward(model, codes, count, Mode::kTrain);
      const LossResult ce = CrossEntropy(ClassLogits(model, fp.scores()), labels, classes);
      std::vector<LayerGrads> grads =
          ModelBackward(model, fp, ScoreGradFromLogits(model, ce.grad));
      const double penalty = ApplyRegularizer(model, reg_cfg, grads);
      if (!std::isfinite(ce.loss + penalty)) {
        throw TrainingError(std::string(stage) + " training diverged (non-finite loss) in epoch " +
                                std::to_string(epoch + 1),
                            epoch + 1);
      }
      loss_sum += ce.loss;
      penalty_sum += penalty;
      UpdateRunningStats(model, fp);

      for (std::size_t l = 0; l < model.layers.size(); ++l) {
        Layer& layer = model.layers[l];
        AdamWStep(layer.weights, grads[l].weights, opt.weights[l], lr, cfg.weight_decay);
        if (bn) {
          AdamWStep(layer.bn_gamma, grads[l].bn_gamma, opt.gamma[l], lr, 0.0);
          AdamWStep(layer.bn_beta, grads[l].bn_beta, opt.beta[l], lr, 0.0);
        }
        // The final quantizer is not on the loss path; it is calibrated.
        if (l + 1 < model.layers.size() &&
            model.options.activation != Activation::kIdentity) {
          std::span<double> scale(&layer.act_scale, 1);
          const double g = grads[l].act_scale;
          AdamWStep(scale, std::span<const double>(&g, 1), opt.scale[l], lr, 0.0);
          layer.act_scale = std::max(layer.act_scale, kMinActScale);
        }
      }
    }
    last_loss = loss_sum / static_cast<double>(n_batches);
    if (sink) {
      EpochMetrics m;
      m.stage = stage;
      m.epoch = epoch + 1;
      m.lr = epoch_lr;
      m.train_loss = last_loss;
      m.reg_penalty = penalty_sum / static_cast<double>(n_batches);
      m.test_accuracy = data.test != nullptr ? ScoreAccuracy(model, *data.test)
                                             : std::numeric_limits<double>::quiet_NaN();
      sink(m);
    }
  }
  RecalibrateBatchNorm(model, train);
  if (model.options.activation == Activation::kQuantized) {
    CalibrateOutputQuantizer(model, train);
  }
  return last_loss;
}

void CheckData(const TrainData& data) {
  if (data.train == nullptr) throw ConfigError("no training split");
}

std::string Sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' ) c = ';';
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

const char* RegularizerName(Regularizer r) {
  switch (r) {
    case Regularizer::kHwExponential: return "hw_exponential";
    case Regularizer::kGroupLasso: return "group_lasso";
    case Regularizer::kNone: return "none";
  }
  return "none";
}

Regularizer RegularizerFromName(std::string_view s) {
  if (s == "hw_exponential") return Regularizer::kHwExponential;
  if (s == "group_lasso") return Regularizer::kGroupLasso;
  if (s == "none") return Regularizer::kNone;
  throw ConfigError("unknown regularizer '" + std::string(s) + "'");
}

const char* PruningName(Pruning p) {
  switch (p) {
    case Pruning::kStructured: return "structured";
    case Pruning::kRandom: return "random";
    case Pruning::kFixedRandom: return "fixed_random";
  }
  return "structured";
}

Pruning PruningFromName(std::string_view s) {
  if (s == "structured") return Pruning::kStructured;
  if (s == "random") return Pruning::kRandom;
  if (s == "fixed_random") return Pruning::kFixedRandom;
  throw ConfigError("unknown pruning mode '" + std::string(s) + "'");
}

std::vector<std::string> TrainConfig::Violations() const {
  std::vector<std::string> v;
  if (epochs_dense < 0) v.push_back("training.epochs_dense must be >= 0");
  if (epochs_retrain < 1) v.push_back("training.epochs_retrain must be >= 1");
  if (batch_size < 1) v.push_back("training.batch_size must be >= 1");
  if (!(lr_max > 0.0)) v.push_back("training.lr_max must be > 0");
  if (!(lr_min >= 0.0) || lr_min > lr_max) {
    v.push_back("training.lr_min must lie in [0, lr_max]");
  }
  if (restart_period < 1) v.push_back("training.restart_period must be >= 1");
  if (!(weight_decay >= 0.0)) v.push_back("training.weight_decay must be >= 0");
  if (!(lambda1 >= 0.0)) v.push_back("training.lambda1 must be >= 0");
  if (!(lambda2 > 0.0)) v.push_back("training.lambda2 must be > 0");
  return v;
}

void TrainConfig::Validate() const {
  const auto v = Violations();
  if (v.empty()) return;
  std::string msg = "invalid training config:";
  for (const auto& s : v) msg += "\n  " + s;
  throw ConfigError(msg);
}

std::vector<std::string> TrainConfig::Warnings() const {
  std::vector<std::string> w;
  if (regularizer == Regularizer::kHwExponential && lambda2 > 0.0 && lambda2 <= 1.0) {
    w.push_back("lambda2 <= 1: the exponential group penalty no longer shrinks group norms");
  }
  return w;
}

std::string FormatMetricsLine(const EpochMetrics& m) {
  auto num = [](double v) { return std::isfinite(v) ? FormatDouble(v) : std::string("null"); };
  std::ostringstream os;
  os << "{\"stage\":\"" << m.stage << "\",\"epoch\":" << m.epoch
     << ",\"lr\":" << num(m.lr) << ",\"train_loss\":" << num(m.train_loss)
     << ",\"reg_penalty\":" << num(m.reg_penalty)
     << ",\"test_accuracy\":" << num(m.test_accuracy) << "}";
  return os.str();
}

std::vector<LayerConfig> DenseArchitecture(const std::vector<LayerConfig>& arch) {
  std::vector<LayerConfig> dense = arch;
  for (LayerConfig& c : dense) {
    c.fan_in = c.in_width;
    c.degree = 1;
  }
  return dense;
}

Model TrainDense(const TrainConfig& config, const TrainData& data,
                 const std::vector<LayerConfig>& arch, const ModelOptions& options,
                 const MetricsSink& sink) {
  config.Validate();
  CheckData(data);
  const auto dense_arch = DenseArchitecture(arch);
  std::vector<SparseMask> masks;
  for (const LayerConfig& c : dense_arch) masks.push_back(SparseMask::Full(c.out_width, c.in_width));
  Rng init(config.seed, RngStream::kDenseInit);
  Model model = MakeModel(dense_arch, std::move(masks), data.input, data.train->num_classes,
                          ModelStage::kDense, options, init);
  TrainLoop(model, config, config.epochs_dense, config.regularizer != Regularizer::kNone,
            RngStream::kDenseShuffle, data, sink, "dense");
  return model;
}

std::vector<SparseMask> PruneTopK(const Model& dense, const std::vector<int>& fan_in) {
  if (fan_in.size() != dense.layers.size()) {
    throw ConfigError("PruneTopK needs one fan-in per layer");
  }
  std::vector<SparseMask> masks;
  for (std::size_t l = 0; l < dense.layers.size(); ++l) {
    const Layer& layer = dense.layers[l];
    const int f = fan_in[l];
    if (f < 1 || f > layer.config.in_width) {
      throw ConfigError("fan_in " + std::to_string(f) + " invalid for layer " +
                        std::to_string(l) + " with in_width " +
                        std::to_string(layer.config.in_width));
    }
    if (layer.config.degree != 1) {
      throw ConfigError("PruneTopK expects degree-1 (dense) layers");
    }
    SparseMask mask;
    mask.in_width = layer.config.in_width;
    mask.fan_in = f;
    for (std::size_t j = 0; j < static_cast<std::size_t>(layer.config.out_width); ++j) {
      const auto w = layer.neuron_weights(j);
      const auto inputs = layer.mask.neuron(j);
      std::vector<std::size_t> order(inputs.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      // Term t + 1 of a degree-1 basis is the linear term of mask input t.
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double wa = std::abs(w[a + 1]);
        const double wb = std::abs(w[b + 1]);
        if (wa != wb) return wa > wb;
        return inputs[a] < inputs[b];
      });
      std::vector<int> keep;
      for (int k = 0; k < f; ++k) keep.push_back(inputs[order[static_cast<std::size_t>(k)]]);
      std::sort(keep.begin(), keep.end());
      mask.indices.insert(mask.indices.end(), keep.begin(), keep.end());
    }
    masks.push_back(std::move(mask));
  }
  return masks;
}

std::vector<SparseMask> RandomMasks(const std::vector<LayerConfig>& arch, std::uint64_t seed) {
  Rng rng(seed, RngStream::kRandomMask);
  std::vector<SparseMask> masks;
  for (const LayerConfig& c : arch) {
    if (c.fan_in < 1 || c.fan_in > c.in_width) {
      throw ConfigError("fan_in exceeds in_width");
    }
    SparseMask mask;
    mask.in_width = c.in_width;
    mask.fan_in = c.fan_in;
    std::vector<int> pool(static_cast<std::size_t>(c.in_width));
    for (int j = 0; j < c.out_width; ++j) {
      std::iota(pool.begin(), pool.end(), 0);
      for (std::size_t k = 0; k < static_cast<std::size_t>(c.fan_in); ++k) {
        const std::size_t pick = k + rng.Below(pool.size() - k);
        std::swap(pool[k], pool[pick]);
      }
      std::vector<int> keep(pool.begin(), pool.begin() + c.fan_in);
      std::sort(keep.begin(), keep.end());
      mask.indices.insert(mask.indices.end(), keep.begin(), keep.end());
    }
    masks.push_back(std::move(mask));
  }
  return masks;
}

Model InitSparse(const std::vector<SparseMask>& masks, const TrainConfig& config,
                 const TrainData& data, const std::vector<LayerConfig>& arch,
                 const ModelOptions& options) {
  CheckData(data);
  Rng init(config.seed, RngStream::kRetrainInit);
  return MakeModel(arch, masks, data.input, data.train->num_classes, ModelStage::kSparse,
                   options, init);
}

Model RetrainSparse(const std::vector<SparseMask>& masks, const TrainConfig& config,
                    const TrainData& data, const std::vector<LayerConfig>& arch,
                    const ModelOptions& options, const MetricsSink& sink) {
  config.Validate();
  Model model = InitSparse(masks, config, data, arch, options);
  TrainLoop(model, config, config.epochs_retrain, config.retrain_regularizer,
            RngStream::kRetrainShuffle, data, sink, "retrain");
  return model;
}

PipelineResult RunPipeline(const TrainConfig& config, const TrainData& data,
                           const std::vector<LayerConfig>& arch, const ModelOptions& options,
                           const MetricsSink& sink) {
  config.Validate();
  CheckData(data);
  ValidateArchitecture(arch);
  PipelineResult result;
  switch (config.pruning) {
    case Pruning::kStructured: {
      result.dense = TrainDense(config, data, arch, options, sink);
      std::vector<int> fan_in;
      for (const LayerConfig& c : arch) fan_in.push_back(c.fan_in);
      result.masks = PruneTopK(*result.dense, fan_in);
      break;
    }
    case Pruning::kRandom:
      result.masks = RandomMasks(arch, config.seed);
      break;
    case Pruning::kFixedRandom:
      result.masks = RandomMasks(arch, config.mask_seed);
      break;
  }
  result.pruned = InitSparse(result.masks, config, data, arch, options);
  result.sparse = result.pruned;
  result.train_loss = TrainLoop(result.sparse, config, config.epochs_retrain,
                                config.retrain_regularizer, RngStream::kRetrainShuffle,
                                data, sink, "retrain");
  result.test_accuracy = data.test != nullptr ? ModelAccuracy(result.sparse, *data.test)
                                              : std::numeric_limits<double>::quiet_NaN();
  return result;
}

void SweepReport::Recompute() {
  std::size_t n = 0;
  double sum = 0.0;
  for (const SweepRow& r : rows) {
    if (!r.ok) continue;
    sum += r.test_accuracy;
    ++n;
  }
  if (n == 0) {
    mean = std = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const SweepRow& r : rows) {
    if (!r.ok) continue;
    ss += (r.test_accuracy - mean) * (r.test_accuracy - mean);
  }
  std = std::sqrt(ss / static_cast<double>(n));
}

SweepReport SeedSweep(const TrainConfig& config, std::span<const std::uint64_t> seeds,
                      const TrainData& data, const std::vector<LayerConfig>& arch,
                      const ModelOptions& options, unsigned threads) {
  if (seeds.size() < 2) throw ConfigError("a seed sweep needs at least two seeds");
  config.Validate();
  SweepReport report;
  report.pruning = PruningName(config.pruning);
  report.rows.resize(seeds.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      SweepRow& row = report.rows[i];
      row.seed = seeds[i];
      try {
        TrainConfig c = config;
        c.seed = seeds[i];
        const PipelineResult r = RunPipeline(c, data, arch, options);
        row.test_accuracy = r.test_accuracy;
        row.train_loss = r.train_loss;
      } catch (const std::exception& e) {
        row.ok = false;
        row.test_accuracy = std::numeric_limits<double>::quiet_NaN();
        row.train_loss = std::numeric_limits<double>::quiet_NaN();
        row.error = Sanitize(e.what());
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(seeds.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  report.Recompute();
  return report;
}

std::string SerializeSweepReport(const SweepReport& report) {
  std::ostringstream os;
  os << "# tabnn seed sweep v1\n";
  os << "# pruning: " << report.pruning << "\n";
  os << "seed,status,test_accuracy,train_loss,error\n";
  for (const SweepRow& r : report.rows) {
    os << r.seed << ',' << (r.ok ? "ok" : "failed") << ','
       << FormatDouble(r.test_accuracy) << ',' << FormatDouble(r.train_loss) << ','
       << r.error << "\n";
  }
  os << "mean," << FormatDouble(report.mean) << "\n";
  os << "std," << FormatDouble(report.std) << "\n";
  return os.str();
}

SweepReport ParseSweepReport(std::string_view text) {
  SweepReport report;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header_seen = false;
  auto fail = [](const std::string& why) { throw ParseError("sweep report: " + why); };
  auto num = [&](std::string_view s) {
    double v;
    if (!detail::ParseDoubleExact(s, &v)) fail("bad number '" + std::string(s) + "'");
    return v;
  };
  bool have_mean = false, have_std = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# pruning: ", 0) == 0) {
      report.pruning = line.substr(11);
      continue;
    }
    if (line[0] == '#') continue;
    if (line == "seed,status,test_accuracy,train_loss,error") {
      header_seen = true;
      continue;
    }
    if (line.rfind("mean,", 0) == 0) {
      report.mean = num(std::string_view(line).substr(5));
      have_mean = true;
      continue;
    }
    if (line.rfind("std,", 0) == 0) {
      report.std = num(std::string_view(line).substr(4));
      have_std = true;
      continue;
    }
    if (!header_seen) fail("row before the column header");
    std::vector<std::string> f;
    std::size_t start = 0;
    for (int k = 0; k < 4; ++k) {
      const std::size_t c = line.find(',', start);
      if (c == std::string::npos) fail("short row '" + line + "'");
      f.push_back(line.substr(start, c - start));
      start = c + 1;
    }
    f.push_back(line.substr(start));
    SweepRow r;
    r.seed = std::stoull(f[0]);
    if (f[1] != "ok" && f[1] != "failed") fail("bad status '" + f[1] + "'");
    r.ok = f[1] == "ok";
    r.test_accuracy = num(f[2]);
    r.train_loss = num(f[3]);
    r.error = f[4];
    report.rows.push_back(std::move(r));
  }
  if (!header_seen || !have_mean || !have_std) fail("missing header or footer");
  return report;
}

}  // namespace tabnn
