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

#include "tabnn/tabnn.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <new>
#include <string>
#include <vector>

#include "tabnn/checkpoint.hpp"
#include "tabnn/config.hpp"
#include "tabnn/error.hpp"
#include "tabnn/lutgen.hpp"
#include "tabnn/netsim.hpp"
#include "tabnn/pipeline.hpp"

struct tabnn_config {
  tabnn::PipelineConfig value;
};
struct tabnn_data {
  tabnn::PreparedData value;
};
struct tabnn_model {
  tabnn::Model value;
};
struct tabnn_netlist {
  tabnn::Netlist value;
};

namespace {

thread_local std::string g_last_error;

tabnn_status Fail(tabnn_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs `fn`, translating exceptions into status codes.
template <typename Fn>
tabnn_status Guard(Fn&& fn) {
  try {
    return fn();
  } catch (const tabnn::IoError& e) {
    return Fail(TABNN_ERR_IO, e.what());
  } catch (const tabnn::HashMismatchError& e) {
    return Fail(TABNN_ERR_MISMATCH, e.what());
  } catch (const tabnn::InternalError& e) {
    return Fail(TABNN_ERR_INTERNAL, std::string("internal error: ") + e.what());
  } catch (const tabnn::TrainingError& e) {
    return Fail(TABNN_ERR_CONFIG, e.what());
  } catch (const tabnn::Error& e) {
    return Fail(TABNN_ERR_CONFIG, e.what());
  } catch (const std::bad_alloc&) {
    return Fail(TABNN_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return Fail(TABNN_ERR_INTERNAL, e.what());
  }
}

tabnn_status NullArg(const char* what) {
  return Fail(TABNN_ERR_CONFIG, std::string(what) + " must not be null");
}

char* CopyString(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

std::vector<std::string> Overrides(const char* const* overrides, size_t n) {
  std::vector<std::string> v;
  for (size_t i = 0; i < n; ++i) {
    if (overrides[i] != nullptr) v.emplace_back(overrides[i]);
  }
  return v;
}

std::string ArtifactPath(const tabnn::PipelineConfig& c, const std::string& suffix) {
  return (std::filesystem::path(c.output.dir) / (c.output.stem + suffix)).string();
}

}  // namespace

extern "C" {

const char* tabnn_version(void) { return "0.1.0"; }

const char* tabnn_last_error(void) { return g_last_error.c_str(); }

void tabnn_string_free(char* s) { std::free(s); }

tabnn_status tabnn_config_load(const char* path, const char* const* overrides, size_t n,
                               tabnn_config** out) {
  if (path == nullptr || out == nullptr) return NullArg("path and out");
  return Guard([&] {
    const auto ov = Overrides(overrides, n);
    *out = new tabnn_config{tabnn::LoadPipelineConfig(path, ov)};
    return TABNN_OK;
  });
}

tabnn_status tabnn_config_parse(const char* text, const char* const* overrides, size_t n,
                                tabnn_config** out) {
  if (text == nullptr || out == nullptr) return NullArg("text and out");
  return Guard([&] {
    const auto ov = Overrides(overrides, n);
    *out = new tabnn_config{tabnn::ParsePipelineConfig(text, ov)};
    return TABNN_OK;
  });
}

tabnn_status tabnn_config_serialize(const tabnn_config* config, char** out) {
  if (config == nullptr || out == nullptr) return NullArg("config and out");
  return Guard([&] {
    *out = CopyString(tabnn::SerializePipelineConfig(config->value));
    return TABNN_OK;
  });
}

void tabnn_config_free(tabnn_config* config) { delete config; }

tabnn_status tabnn_data_prepare(const tabnn_config* config, tabnn_data** out) {
  if (config == nullptr || out == nullptr) return NullArg("config and out");
  return Guard([&] {
    *out = new tabnn_data{tabnn::PrepareData(config->value)};
    return TABNN_OK;
  });
}

size_t tabnn_data_test_rows(const tabnn_data* data) {
  return data == nullptr ? 0 : data->value.test.rows;
}

size_t tabnn_data_warning_count(const tabnn_data* data) {
  return data == nullptr ? 0 : data->value.warnings.size();
}

const char* tabnn_data_warning(const tabnn_data* data, size_t i) {
  if (data == nullptr || i >= data->value.warnings.size()) return "";
  return data->value.warnings[i].c_str();
}

void tabnn_data_free(tabnn_data* data) { delete data; }

tabnn_status tabnn_train(const tabnn_config* config, const tabnn_data* data,
                         tabnn_train_summary* summary) {
  if (config == nullptr || data == nullptr) return NullArg("config and data");
  return Guard([&] {
    const tabnn::PipelineConfig& c = config->value;
    std::string metrics;
    const tabnn::MetricsSink sink = [&](const tabnn::EpochMetrics& m) {
      metrics += tabnn::FormatMetricsLine(m);
      metrics += '\n';
    };
    const tabnn::PipelineResult r =
        tabnn::RunPipeline(c.training, data->value.View(), data->value.arch, c.Options(), sink);
    if (r.dense) tabnn::SaveModel(*r.dense, ArtifactPath(c, "_dense.json"));
    tabnn::SaveModel(r.pruned, ArtifactPath(c, "_pruned.json"));
    tabnn::SaveModel(r.sparse, ArtifactPath(c, "_sparse.json"));
    tabnn::WriteFile(ArtifactPath(c, "_masks.json"), tabnn::SerializeMasks(r.masks));
    tabnn::WriteFile(ArtifactPath(c, "_metrics.jsonl"), metrics);
    tabnn::WriteFile(ArtifactPath(c, "_config.json"), tabnn::SerializePipelineConfig(c));
    if (summary != nullptr) {
      summary->test_accuracy = r.test_accuracy;
      summary->train_loss = r.train_loss;
      summary->has_dense = r.dense.has_value() ? 1 : 0;
    }
    return TABNN_OK;
  });
}

tabnn_status tabnn_model_load(const char* path, tabnn_model** out) {
  if (path == nullptr || out == nullptr) return NullArg("path and out");
  return Guard([&] {
    *out = new tabnn_model{tabnn::LoadModel(path)};
    return TABNN_OK;
  });
}

int tabnn_model_is_sparse(const tabnn_model* model) {
  return model != nullptr && model->value.stage == tabnn::ModelStage::kSparse ? 1 : 0;
}

size_t tabnn_model_layers(const tabnn_model* model) {
  return model == nullptr ? 0 : model->value.layers.size();
}

tabnn_status tabnn_model_hash(const tabnn_model* model, char** out) {
  if (model == nullptr || out == nullptr) return NullArg("model and out");
  return Guard([&] {
    *out = CopyString(tabnn::ModelHash(model->value));
    return TABNN_OK;
  });
}

void tabnn_model_free(tabnn_model* model) { delete model; }

tabnn_status tabnn_eval(const tabnn_model* model, const tabnn_data* data,
                        double* code_accuracy, double* score_accuracy) {
  if (model == nullptr || data == nullptr) return NullArg("model and data");
  return Guard([&] {
    const tabnn::QuantizedDataset& test = data->value.test;
    if (test.cols != static_cast<std::size_t>(model->value.layers.front().config.in_width) ||
        test.input_spec.bits != model->value.input.spec.bits) {
      return Fail(TABNN_ERR_CONFIG, "checkpoint does not match the dataset shape");
    }
    if (code_accuracy != nullptr) *code_accuracy = tabnn::ModelAccuracy(model->value, test);
    if (score_accuracy != nullptr) *score_accuracy = tabnn::ScoreAccuracy(model->value, test);
    return TABNN_OK;
  });
}

tabnn_status tabnn_compile(const tabnn_model* model, unsigned threads, tabnn_netlist** out) {
  if (model == nullptr || out == nullptr) return NullArg("model and out");
  if (model->value.stage != tabnn::ModelStage::kSparse) {
    return Fail(TABNN_ERR_CONFIG,
                "this is a dense checkpoint; compile the <stem>_sparse.json checkpoint "
                "written by `train` instead");
  }
  return Guard([&] {
    *out = new tabnn_netlist{tabnn::BuildNetlist(model->value, threads)};
    return TABNN_OK;
  });
}

tabnn_status tabnn_netlist_load(const char* path, tabnn_netlist** out) {
  if (path == nullptr || out == nullptr) return NullArg("path and out");
  return Guard([&] {
    *out = new tabnn_netlist{tabnn::LoadNetlist(path)};
    return TABNN_OK;
  });
}

tabnn_status tabnn_netlist_save(const tabnn_netlist* netlist, const char* path) {
  if (netlist == nullptr || path == nullptr) return NullArg("netlist and path");
  return Guard([&] {
    tabnn::SaveNetlist(netlist->value, path);
    return TABNN_OK;
  });
}

tabnn_status tabnn_netlist_emit_verilog(const tabnn_netlist* netlist, const char* dir) {
  if (netlist == nullptr || dir == nullptr) return NullArg("netlist and dir");
  return Guard([&] {
    tabnn::WriteVerilog(netlist->value, dir);
    return TABNN_OK;
  });
}

size_t tabnn_netlist_nodes(const tabnn_netlist* netlist) {
  return netlist == nullptr ? 0 : netlist->value.node_count();
}

void tabnn_netlist_free(tabnn_netlist* netlist) { delete netlist; }

tabnn_status tabnn_netlist_cost(const tabnn_netlist* netlist, int k, tabnn_cost* out) {
  if (netlist == nullptr || out == nullptr) return NullArg("netlist and out");
  return Guard([&] {
    const tabnn::CostEstimate c = tabnn::EstimateCost(netlist->value, k);
    out->plut_count = c.plut_count;
    out->llut_count = c.llut_count;
    out->latency_cycles = c.latency_cycles;
    out->k = c.k;
    return TABNN_OK;
  });
}

tabnn_status tabnn_verify(const tabnn_model* model, const tabnn_netlist* netlist,
                          const tabnn_data* data, size_t cap, tabnn_verify_summary* summary,
                          char** report) {
  if (model == nullptr || netlist == nullptr || data == nullptr) {
    return NullArg("model, netlist and data");
  }
  return Guard([&] {
    const tabnn::EquivalenceReport r =
        tabnn::VerifyEquivalence(model->value, netlist->value, data->value.test, cap);
    if (summary != nullptr) {
      summary->samples_checked = r.samples_checked;
      summary->mismatch_count = r.mismatch_count;
      summary->mismatched_samples = r.mismatched_samples;
      summary->table_entries_checked = r.table_entries_checked;
      summary->table_mismatches = r.table_mismatches;
      summary->latency_cycles = r.latency_cycles;
      summary->pass = r.pass ? 1 : 0;
    }
    if (report != nullptr) *report = CopyString(tabnn::SerializeReport(r));
    if (!r.pass) {
      return Fail(TABNN_ERR_MISMATCH,
                  std::to_string(r.mismatch_count) + " code mismatches in " +
                      std::to_string(r.mismatched_samples) + " samples, " +
                      std::to_string(r.table_mismatches) + " table mismatches");
    }
    return TABNN_OK;
  });
}

tabnn_status tabnn_netlist_accuracy(const tabnn_netlist* netlist, const tabnn_data* data,
                                    double* accuracy) {
  if (netlist == nullptr || data == nullptr || accuracy == nullptr) {
    return NullArg("netlist, data and accuracy");
  }
  return Guard([&] {
    *accuracy = tabnn::NetlistAccuracy(netlist->value, data->value.test);
    return TABNN_OK;
  });
}

tabnn_status tabnn_sweep(const tabnn_config* config, const tabnn_data* data,
                         const uint64_t* seeds, size_t n, unsigned threads,
                         tabnn_sweep_summary* summary, char** report) {
  if (config == nullptr || data == nullptr || (seeds == nullptr && n > 0)) {
    return NullArg("config, data and seeds");
  }
  if (n < 2) return Fail(TABNN_ERR_CONFIG, "a sweep needs at least two seeds");
  return Guard([&] {
    const tabnn::PipelineConfig& c = config->value;
    const tabnn::SweepReport r =
        tabnn::SeedSweep(c.training, std::span<const std::uint64_t>(seeds, n),
                         data->value.View(), data->value.arch, c.Options(), threads);
    if (summary != nullptr) {
      summary->mean = r.mean;
      summary->std = r.std;
      summary->failed = 0;
      for (const auto& row : r.rows) summary->failed += row.ok ? 0 : 1;
    }
    if (report != nullptr) *report = CopyString(tabnn::SerializeSweepReport(r));
    return TABNN_OK;
  });
}

}  // extern "C"
