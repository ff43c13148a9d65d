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

#include "tabnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tabnn/error.hpp"

namespace tabnn {

namespace {

// Powers x^0..x^D of the F gathered inputs of one neuron, F x (D + 1).
// Built by repeated multiplication so that ExpandFeatures and this path agree
// bit for bit.
void FillPowers(std::span<const double> x, int degree, std::vector<double>& pw) {
  const std::size_t stride = static_cast<std::size_t>(degree) + 1;
  pw.resize(x.size() * stride);
  for (std::size_t k = 0; k < x.size(); ++k) {
    double* p = pw.data() + k * stride;
    p[0] = 1.0;
    for (int e = 1; e <= degree; ++e) p[e] = p[e - 1] * x[k];
  }
}

double Monomial(const std::vector<MonomialFactor>& factors,
                const std::vector<double>& pw, std::size_t stride) {
  double m = 1.0;
  for (const MonomialFactor& f : factors) {
    m *= pw[static_cast<std::size_t>(f.var) * stride +
            static_cast<std::size_t>(f.power)];
  }
  return m;
}

double PolyDot(const Layer& layer, std::size_t j, const std::vector<double>& pw) {
  const std::size_t stride = static_cast<std::size_t>(layer.config.degree) + 1;
  const auto w = layer.neuron_weights(j);
  double z = 0.0;
  for (std::size_t t = 0; t < layer.terms(); ++t) {
    z += w[t] * Monomial(layer.basis.factors[t], pw, stride);
  }
  return z;
}

double InvStd(double var, double eps) { return 1.0 / std::sqrt(var + eps); }

double Normalize(double z, double mean, double inv_std) {
  return (z - mean) * inv_std;
}

double Affine(double xhat, double gamma, double beta) {
  return gamma * xhat + beta;
}

double ActivationOut(const ModelOptions& opt, double y, const QuantSpec& spec) {
  switch (opt.activation) {
    case Activation::kQuantized:
      return QuantActForward(y, spec).dequant;
    case Activation::kClipped:
      return std::clamp(y, 0.0, spec.scale);
    case Activation::kIdentity:
      return y;
  }
  throw InternalError("unknown activation");
}

void Gather(std::span<const double> row, std::span<const int> idx,
            std::vector<double>& x) {
  x.resize(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    x[k] = row[static_cast<std::size_t>(idx[k])];
  }
}

}  // namespace

void LayerConfig::Validate() const {
  if (in_width < 1 || out_width < 1 || fan_in < 1 || degree < 1 ||
      in_bits < 1 || out_bits < 1) {
    throw ConfigError("layer fields must all be positive");
  }
  if (fan_in > in_width) {
    throw ConfigError("fan_in " + std::to_string(fan_in) +
                      " exceeds in_width " + std::to_string(in_width));
  }
  if (in_bits > 30 || out_bits > 30) {
    throw ConfigError("bit-widths above 30 are not supported");
  }
}

SparseMask SparseMask::Full(int out_width, int in_width) {
  SparseMask m;
  m.in_width = in_width;
  m.fan_in = in_width;
  m.indices.reserve(static_cast<std::size_t>(out_width) *
                    static_cast<std::size_t>(in_width));
  for (int j = 0; j < out_width; ++j) {
    for (int i = 0; i < in_width; ++i) m.indices.push_back(i);
  }
  return m;
}

void SparseMask::Validate() const {
  if (fan_in < 1 || fan_in > in_width) {
    throw ConfigError("mask fan_in out of range");
  }
  if (indices.size() % static_cast<std::size_t>(fan_in) != 0) {
    throw ConfigError("mask size is not a multiple of fan_in");
  }
  for (std::size_t j = 0; j < neurons(); ++j) {
    const auto row = neuron(j);
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (row[k] < 0 || row[k] >= in_width) {
        throw ConfigError("mask index " + std::to_string(row[k]) +
                          " out of range for neuron " + std::to_string(j));
      }
      if (k > 0 && row[k] <= row[k - 1]) {
        throw ConfigError("mask indices of neuron " + std::to_string(j) +
                          " are not strictly increasing");
      }
    }
  }
}

void ModelOptions::Validate() const {
  if (!(bn_eps > 0.0)) throw ConfigError("batch-norm eps must be > 0");
  if (!(bn_momentum > 0.0 && bn_momentum <= 1.0)) {
    throw ConfigError("batch-norm momentum must lie in (0, 1]");
  }
}

QuantSpec Model::InSpec(std::size_t l) const {
  if (l == 0) return input.spec;
  return OutSpec(l - 1);
}

QuantSpec Model::OutSpec(std::size_t l) const {
  return QuantSpec{layers[l].config.out_bits, layers[l].act_scale, false};
}

std::vector<LayerConfig> Model::Architecture() const {
  std::vector<LayerConfig> arch;
  for (const Layer& layer : layers) arch.push_back(layer.config);
  return arch;
}

void ValidateArchitecture(const std::vector<LayerConfig>& arch) {
  if (arch.empty()) throw ConfigError("architecture has no layers");
  for (std::size_t i = 0; i < arch.size(); ++i) {
    arch[i].Validate();
    if (i > 0) {
      if (arch[i].in_width != arch[i - 1].out_width) {
        throw ConfigError("layer " + std::to_string(i) + " in_width " +
                          std::to_string(arch[i].in_width) +
                          " != layer " + std::to_string(i - 1) +
                          " out_width " + std::to_string(arch[i - 1].out_width));
      }
      if (arch[i].in_bits != arch[i - 1].out_bits) {
        throw ConfigError("layer " + std::to_string(i) +
                          " in_bits disagrees with the previous out_bits");
      }
    }
  }
}

void Model::Validate() const {
  options.Validate();
  ValidateArchitecture(Architecture());
  if (layers.front().config.in_width != static_cast<int>(input.ranges.size())) {
    throw ConfigError("first layer in_width does not match the input width");
  }
  if (layers.front().config.in_bits != input.spec.bits) {
    throw ConfigError("first layer in_bits does not match the input quantizer");
  }
  const int out = layers.back().config.out_width;
  if (out != num_classes && !(out == 1 && num_classes == 2)) {
    throw ConfigError("final layer width " +
                      std::to_string(layers.back().config.out_width) +
                      " != num_classes " + std::to_string(num_classes));
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = layers[l];
    const auto width = static_cast<std::size_t>(layer.config.out_width);
    layer.mask.Validate();
    if (layer.mask.neurons() != width ||
        layer.mask.fan_in != layer.config.fan_in ||
        layer.mask.in_width != layer.config.in_width) {
      throw ConfigError("mask of layer " + std::to_string(l) +
                        " does not match its config");
    }
    if (layer.basis.fan_in != layer.config.fan_in ||
        layer.basis.degree != layer.config.degree) {
      throw ConfigError("basis of layer " + std::to_string(l) +
                        " does not match its config");
    }
    if (layer.weights.size() != width * layer.terms() ||
        layer.bn_gamma.size() != width || layer.bn_beta.size() != width ||
        layer.bn_mean.size() != width || layer.bn_var.size() != width) {
      throw ConfigError("parameter shapes of layer " + std::to_string(l) +
                        " are inconsistent");
    }
    for (double v : layer.bn_var) {
      if (!(v >= 0.0)) throw ConfigError("negative BN running variance");
    }
    if (!(layer.act_scale > 0.0)) throw ConfigError("act_scale must be > 0");
  }
}

Layer MakeLayer(const LayerConfig& config, SparseMask mask, Rng& rng) {
  config.Validate();
  Layer layer;
  layer.config = config;
  layer.mask = std::move(mask);
  layer.basis = EnumerateMonomials(config.fan_in, config.degree);
  const auto width = static_cast<std::size_t>(config.out_width);
  const double bound = 1.0 / std::sqrt(static_cast<double>(layer.terms()));
  layer.weights.resize(width * layer.terms());
  for (double& w : layer.weights) w = rng.Uniform(-bound, bound);
  layer.bn_gamma.assign(width, 1.0);
  layer.bn_beta.assign(width, 0.0);
  layer.bn_mean.assign(width, 0.0);
  layer.bn_var.assign(width, 1.0);
  layer.act_scale = kInitialActScale;
  return layer;
}

Model MakeModel(const std::vector<LayerConfig>& arch,
                std::vector<SparseMask> masks, const InputQuantizer& input,
                int num_classes, ModelStage stage, const ModelOptions& options,
                Rng& rng) {
  ValidateArchitecture(arch);
  if (masks.size() != arch.size()) {
    throw ConfigError("one mask per layer required");
  }
  Model model;
  model.options = options;
  model.input = input;
  model.num_classes = num_classes;
  model.stage = stage;
  for (std::size_t l = 0; l < arch.size(); ++l) {
    model.layers.push_back(MakeLayer(arch[l], std::move(masks[l]), rng));
  }
  model.Validate();
  return model;
}

ForwardPass ModelForward(const Model& model, std::span<const std::int32_t> codes,
                         std::size_t batch, Mode mode) {
  const std::size_t in0 = static_cast<std::size_t>(model.layers.front().config.in_width);
  if (codes.size() != batch * in0) {
    throw InternalError("ModelForward: input codes do not match batch x width");
  }
  const bool use_batch_stats = mode == Mode::kTrain && model.options.batch_norm;
  if (use_batch_stats && batch < 2) {
    throw ConfigError("training-mode batch norm needs a batch of at least 2");
  }

  ForwardPass fp;
  fp.batch = batch;
  fp.mode = mode;
  fp.layers.resize(model.layers.size());

  const QuantSpec in_spec = model.InSpec(0);
  std::vector<double> current(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    current[i] = in_spec.Dequantize(codes[i]);
  }

  std::vector<double> x, pw;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const Layer& layer = model.layers[l];
    LayerTrace& t = fp.layers[l];
    const auto in_w = static_cast<std::size_t>(layer.config.in_width);
    const auto out_w = static_cast<std::size_t>(layer.config.out_width);
    t.input = std::move(current);
    t.z.assign(batch * out_w, 0.0);
    for (std::size_t b = 0; b < batch; ++b) {
      const std::span<const double> row(t.input.data() + b * in_w, in_w);
      for (std::size_t j = 0; j < out_w; ++j) {
        Gather(row, layer.mask.neuron(j), x);
        FillPowers(x, layer.config.degree, pw);
        t.z[b * out_w + j] = PolyDot(layer, j, pw);
      }
    }

    t.xhat.assign(batch * out_w, 0.0);
    t.y.assign(batch * out_w, 0.0);
    t.inv_std.assign(out_w, 1.0);
    if (model.options.batch_norm) {
      std::vector<double> mean(out_w), var(out_w);
      if (use_batch_stats) {
        const double n = static_cast<double>(batch);
        for (std::size_t j = 0; j < out_w; ++j) {
          double s = 0.0;
          for (std::size_t b = 0; b < batch; ++b) s += t.z[b * out_w + j];
          mean[j] = s / n;
          double v = 0.0;
          for (std::size_t b = 0; b < batch; ++b) {
            const double d = t.z[b * out_w + j] - mean[j];
            v += d * d;
          }
          var[j] = v / n;
        }
        t.batch_mean = mean;
        t.batch_var = var;
      } else {
        mean = layer.bn_mean;
        var = layer.bn_var;
      }
      for (std::size_t j = 0; j < out_w; ++j) {
        t.inv_std[j] = InvStd(var[j], model.options.bn_eps);
      }
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t j = 0; j < out_w; ++j) {
          const std::size_t k = b * out_w + j;
          t.xhat[k] = Normalize(t.z[k], mean[j], t.inv_std[j]);
          t.y[k] = Affine(t.xhat[k], layer.bn_gamma[j], layer.bn_beta[j]);
        }
      }
    } else {
      t.xhat = t.z;
      t.y = t.z;
    }

    const QuantSpec out_spec = model.OutSpec(l);
    t.out.resize(batch * out_w);
    if (model.options.activation == Activation::kQuantized) {
      t.codes.resize(batch * out_w);
      for (std::size_t k = 0; k < t.y.size(); ++k) {
        const QuantResult q = QuantActForward(t.y[k], out_spec);
        t.codes[k] = q.code;
        t.out[k] = q.dequant;
      }
    } else {
      for (std::size_t k = 0; k < t.y.size(); ++k) {
        t.out[k] = ActivationOut(model.options, t.y[k], out_spec);
      }
    }
    current = t.out;
  }
  return fp;
}

std::vector<LayerGrads> ModelBackward(const Model& model, const ForwardPass& fp,
                                      std::span<const double> grad_scores) {
  const std::size_t batch = fp.batch;
  const std::size_t n_layers = model.layers.size();
  if (grad_scores.size() != fp.scores().size()) {
    throw InternalError("ModelBackward: gradient shape mismatch");
  }
  std::vector<LayerGrads> grads(n_layers);
  std::vector<double> dout;  // gradient w.r.t. the current layer's `out`
  std::vector<double> x, pw, grad_m, grad_x;

  for (std::size_t li = n_layers; li-- > 0;) {
    const Layer& layer = model.layers[li];
    const LayerTrace& t = fp.layers[li];
    LayerGrads& g = grads[li];
    const auto in_w = static_cast<std::size_t>(layer.config.in_width);
    const auto out_w = static_cast<std::size_t>(layer.config.out_width);
    const QuantSpec out_spec = model.OutSpec(li);

    std::vector<double> dy(batch * out_w);
    if (li + 1 == n_layers) {
      std::copy(grad_scores.begin(), grad_scores.end(), dy.begin());
    } else {
      for (std::size_t k = 0; k < dy.size(); ++k) {
        const double v = t.y[k];
        switch (model.options.activation) {
          case Activation::kQuantized: {
            const QuantGrad qg = QuantActBackward(dout[k], v, out_spec);
            dy[k] = qg.grad_v;
            g.act_scale += qg.grad_scale;
            break;
          }
          case Activation::kClipped:
            if (v < 0.0) {
              dy[k] = 0.0;
            } else if (v > out_spec.scale) {
              dy[k] = 0.0;
              g.act_scale += dout[k];
            } else {
              dy[k] = dout[k];
            }
            break;
          case Activation::kIdentity:
            dy[k] = dout[k];
            break;
        }
      }
    }

    std::vector<double> dz(batch * out_w);
    g.bn_gamma.assign(out_w, 0.0);
    g.bn_beta.assign(out_w, 0.0);
    if (model.options.batch_norm) {
      const bool batch_stats = fp.mode == Mode::kTrain;
      const double n = static_cast<double>(batch);
      for (std::size_t j = 0; j < out_w; ++j) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
          const std::size_t k = b * out_w + j;
          sum_dy += dy[k];
          sum_dy_xhat += dy[k] * t.xhat[k];
        }
        g.bn_gamma[j] = sum_dy_xhat;
        g.bn_beta[j] = sum_dy;
        const double gamma = layer.bn_gamma[j];
        const double inv_std = t.inv_std[j];
        for (std::size_t b = 0; b < batch; ++b) {
          const std::size_t k = b * out_w + j;
          if (batch_stats) {
            dz[k] = gamma * inv_std / n *
                    (n * dy[k] - sum_dy - t.xhat[k] * sum_dy_xhat);
          } else {
            dz[k] = dy[k] * gamma * inv_std;
          }
        }
      }
    } else {
      dz = dy;
    }

    g.weights.assign(layer.weights.size(), 0.0);
    std::vector<double> din;
    const bool need_input_grad = li > 0;
    if (need_input_grad) din.assign(batch * in_w, 0.0);
    const std::size_t stride = static_cast<std::size_t>(layer.config.degree) + 1;
    grad_m.resize(layer.terms());
    for (std::size_t b = 0; b < batch; ++b) {
      const std::span<const double> row(t.input.data() + b * in_w, in_w);
      for (std::size_t j = 0; j < out_w; ++j) {
        const double dzk = dz[b * out_w + j];
        if (dzk == 0.0) continue;
        const auto mask = layer.mask.neuron(j);
        Gather(row, mask, x);
        FillPowers(x, layer.config.degree, pw);
        const auto w = layer.neuron_weights(j);
        double* gw = g.weights.data() + j * layer.terms();
        for (std::size_t tt = 0; tt < layer.terms(); ++tt) {
          gw[tt] += dzk * Monomial(layer.basis.factors[tt], pw, stride);
          grad_m[tt] = dzk * w[tt];
        }
        if (need_input_grad) {
          grad_x.assign(mask.size(), 0.0);
          ExpandFeaturesBackward(x, layer.basis, grad_m, grad_x);
          for (std::size_t k = 0; k < mask.size(); ++k) {
            din[b * in_w + static_cast<std::size_t>(mask[k])] += grad_x[k];
          }
        }
      }
    }
    dout = std::move(din);
  }
  return grads;
}

void UpdateRunningStats(Model& model, const ForwardPass& fp) {
  if (!model.options.batch_norm || fp.mode != Mode::kTrain) return;
  const double m = model.options.bn_momentum;
  const double n = static_cast<double>(fp.batch);
  const double unbias = fp.batch > 1 ? n / (n - 1.0) : 1.0;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    Layer& layer = model.layers[l];
    const LayerTrace& t = fp.layers[l];
    for (std::size_t j = 0; j < layer.bn_mean.size(); ++j) {
      layer.bn_mean[j] = (1.0 - m) * layer.bn_mean[j] + m * t.batch_mean[j];
      layer.bn_var[j] = (1.0 - m) * layer.bn_var[j] + m * t.batch_var[j] * unbias;
    }
  }
}

void RecalibrateBatchNorm(Model& model, const QuantizedDataset& data) {
  if (!model.options.batch_norm || data.rows == 0) return;
  const std::size_t n = data.rows;
  const QuantSpec in0 = model.InSpec(0);
  std::vector<double> prev;  // n x width of the previous layer's outputs
  std::vector<double> x, pw;

  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    Layer& layer = model.layers[l];
    const auto in_w = static_cast<std::size_t>(layer.config.in_width);
    const auto out_w = static_cast<std::size_t>(layer.config.out_width);
    std::vector<double> z(n * out_w);
    std::vector<double> row(in_w);
    for (std::size_t b = 0; b < n; ++b) {
      if (l == 0) {
        const auto codes = data.row(b);
        for (std::size_t i = 0; i < in_w; ++i) row[i] = in0.Dequantize(codes[i]);
      } else {
        std::copy_n(prev.begin() + static_cast<std::ptrdiff_t>(b * in_w), in_w,
                    row.begin());
      }
      for (std::size_t j = 0; j < out_w; ++j) {
        Gather(row, layer.mask.neuron(j), x);
        FillPowers(x, layer.config.degree, pw);
        z[b * out_w + j] = PolyDot(layer, j, pw);
      }
    }
    const double dn = static_cast<double>(n);
    for (std::size_t j = 0; j < out_w; ++j) {
      double s = 0.0;
      for (std::size_t b = 0; b < n; ++b) s += z[b * out_w + j];
      const double mean = s / dn;
      double v = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const double d = z[b * out_w + j] - mean;
        v += d * d;
      }
      layer.bn_mean[j] = mean;
      layer.bn_var[j] = v / dn;
    }
    const QuantSpec out_spec = model.OutSpec(l);
    prev.assign(n * out_w, 0.0);
    for (std::size_t j = 0; j < out_w; ++j) {
      const double inv_std = InvStd(layer.bn_var[j], model.options.bn_eps);
      for (std::size_t b = 0; b < n; ++b) {
        const std::size_t k = b * out_w + j;
        const double y = Affine(Normalize(z[k], layer.bn_mean[j], inv_std),
                                layer.bn_gamma[j], layer.bn_beta[j]);
        prev[k] = ActivationOut(model.options, y, out_spec);
      }
    }
  }
}

void CalibrateOutputQuantizer(Model& model, const QuantizedDataset& data) {
  if (data.rows == 0) return;
  constexpr std::size_t kChunk = 1024;
  std::vector<double> pooled;
  pooled.reserve(data.rows * static_cast<std::size_t>(model.layers.back().config.out_width));
  for (std::size_t start = 0; start < data.rows; start += kChunk) {
    const std::size_t count = std::min(kChunk, data.rows - start);
    const std::span<const std::int32_t> codes(data.codes.data() + start * data.cols,
                                              count * data.cols);
    const ForwardPass fp = ModelForward(model, codes, count, Mode::kEval);
    pooled.insert(pooled.end(), fp.scores().begin(), fp.scores().end());
  }
  auto quantile = [&](double q) {
    const auto k = static_cast<std::size_t>(q * static_cast<double>(pooled.size() - 1));
    std::nth_element(pooled.begin(), pooled.begin() + static_cast<std::ptrdiff_t>(k),
                     pooled.end());
    return pooled[k];
  };
  const double lo = quantile(0.01);
  const double hi = quantile(0.99);
  Layer& last = model.layers.back();
  double shift = 0.0;
  if (IsBinaryHead(model)) {
    // Keep the decision threshold at half scale.
    const double mid = 0.5 * last.act_scale;
    const double half = std::max(std::abs(lo - mid), std::abs(hi - mid));
    const double scale = half > 0.0 ? 2.0 * half : last.act_scale;
    shift = 0.5 * scale - mid;
    last.act_scale = scale;
  } else {
    shift = -lo;
    last.act_scale = hi > lo ? hi - lo : 1.0;
  }
  if (model.options.batch_norm) {
    for (double& b : last.bn_beta) b += shift;
  } else {
    for (std::size_t j = 0; j < static_cast<std::size_t>(last.config.out_width); ++j) {
      last.neuron_weights(j)[0] += shift;
    }
  }
}

double NeuronPreactivation(const Model& model, std::size_t l, std::size_t j,
                           std::span<const std::int64_t> gathered_codes) {
  const Layer& layer = model.layers[l];
  const QuantSpec in_spec = model.InSpec(l);
  std::vector<double> x(gathered_codes.size()), pw;
  for (std::size_t k = 0; k < x.size(); ++k) {
    x[k] = in_spec.Dequantize(gathered_codes[k]);
  }
  FillPowers(x, layer.config.degree, pw);
  const double z = PolyDot(layer, j, pw);
  if (!model.options.batch_norm) return z;
  const double inv_std = InvStd(layer.bn_var[j], model.options.bn_eps);
  return Affine(Normalize(z, layer.bn_mean[j], inv_std), layer.bn_gamma[j],
                layer.bn_beta[j]);
}

std::int64_t NeuronCode(const Model& model, std::size_t l, std::size_t j,
                        std::span<const std::int64_t> gathered_codes) {
  return QuantActForward(NeuronPreactivation(model, l, j, gathered_codes),
                         model.OutSpec(l))
      .code;
}

std::vector<std::int64_t> LayerForwardCodes(const Model& model, std::size_t l,
                                            std::span<const std::int64_t> codes_in) {
  const Layer& layer = model.layers[l];
  if (codes_in.size() != static_cast<std::size_t>(layer.config.in_width)) {
    throw InternalError("LayerForwardCodes: width mismatch");
  }
  const QuantSpec in_spec = model.InSpec(l);
  std::vector<std::int64_t> out(static_cast<std::size_t>(layer.config.out_width));
  std::vector<std::int64_t> gathered(static_cast<std::size_t>(layer.config.fan_in));
  for (std::size_t j = 0; j < out.size(); ++j) {
    const auto mask = layer.mask.neuron(j);
    for (std::size_t k = 0; k < mask.size(); ++k) {
      const int idx = mask[k];
      if (idx < 0 || idx >= layer.config.in_width) {
        throw InternalError("mask index out of range in layer " + std::to_string(l));
      }
      gathered[k] = codes_in[static_cast<std::size_t>(idx)];
      if (!in_spec.InRange(gathered[k])) {
        throw InternalError("input code out of range in layer " + std::to_string(l));
      }
    }
    out[j] = NeuronCode(model, l, j, gathered);
  }
  return out;
}

std::vector<std::vector<std::int64_t>> SampleForwardCodes(
    const Model& model, std::span<const std::int32_t> input_codes) {
  std::vector<std::vector<std::int64_t>> result;
  result.reserve(model.layers.size());
  std::vector<std::int64_t> current(input_codes.begin(), input_codes.end());
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    current = LayerForwardCodes(model, l, current);
    result.push_back(current);
  }
  return result;
}

int ArgmaxCode(std::span<const std::int64_t> codes) {
  int best = 0;
  for (std::size_t c = 1; c < codes.size(); ++c) {
    if (codes[c] > codes[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  return best;
}

int ArgmaxScore(std::span<const double> scores) {
  int best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  return best;
}

bool IsBinaryHead(const Model& model) {
  return model.num_classes == 2 && model.layers.back().config.out_width == 1;
}

int PredictClass(std::span<const std::int64_t> final_codes, int out_bits) {
  if (final_codes.size() == 1) {
    return final_codes[0] >= (std::int64_t{1} << (out_bits - 1)) ? 1 : 0;
  }
  return ArgmaxCode(final_codes);
}

std::vector<double> ClassLogits(const Model& model, std::span<const double> scores) {
  if (!IsBinaryHead(model)) return {scores.begin(), scores.end()};
  const double mid = 0.5 * model.layers.back().act_scale;
  std::vector<double> logits(2 * scores.size());
  for (std::size_t b = 0; b < scores.size(); ++b) {
    logits[2 * b] = 0.0;
    logits[2 * b + 1] = scores[b] - mid;
  }
  return logits;
}

std::vector<double> ScoreGradFromLogits(const Model& model, std::span<const double> grad_logits) {
  if (!IsBinaryHead(model)) return {grad_logits.begin(), grad_logits.end()};
  std::vector<double> g(grad_logits.size() / 2);
  for (std::size_t b = 0; b < g.size(); ++b) g[b] = grad_logits[2 * b + 1];
  return g;
}

double ModelAccuracy(const Model& model, const QuantizedDataset& data) {
  if (data.rows == 0) return 0.0;
  const int bits = model.layers.back().config.out_bits;
  std::size_t correct = 0;
  for (std::size_t r = 0; r < data.rows; ++r) {
    const auto codes = SampleForwardCodes(model, data.row(r));
    if (PredictClass(codes.back(), bits) == data.labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.rows);
}

double ScoreAccuracy(const Model& model, const QuantizedDataset& data) {
  if (data.rows == 0) return 0.0;
  constexpr std::size_t kChunk = 1024;
  const std::size_t classes = static_cast<std::size_t>(model.num_classes);
  std::size_t correct = 0;
  for (std::size_t start = 0; start < data.rows; start += kChunk) {
    const std::size_t count = std::min(kChunk, data.rows - start);
    const std::span<const std::int32_t> codes(data.codes.data() + start * data.cols,
                                              count * data.cols);
    const ForwardPass fp = ModelForward(model, codes, count, Mode::kEval);
    const std::vector<double> logits = ClassLogits(model, fp.scores());
    for (std::size_t b = 0; b < count; ++b) {
      const std::span<const double> s(logits.data() + b * classes, classes);
      if (ArgmaxScore(s) == data.labels[start + b]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.rows);
}

}  // namespace tabnn
