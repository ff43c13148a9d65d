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

// tabnn command-line driver. Exit codes: 0 success, 1 config or validation
// error, 2 verification mismatch, 3 I/O error, 4 internal error.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tabnn/tabnn.h"

namespace {

struct ConfigDeleter {
  void operator()(tabnn_config* p) const { tabnn_config_free(p); }
};
struct DataDeleter {
  void operator()(tabnn_data* p) const { tabnn_data_free(p); }
};
struct ModelDeleter {
  void operator()(tabnn_model* p) const { tabnn_model_free(p); }
};
struct NetlistDeleter {
  void operator()(tabnn_netlist* p) const { tabnn_netlist_free(p); }
};
using ConfigPtr = std::unique_ptr<tabnn_config, ConfigDeleter>;
using DataPtr = std::unique_ptr<tabnn_data, DataDeleter>;
using ModelPtr = std::unique_ptr<tabnn_model, ModelDeleter>;
using NetlistPtr = std::unique_ptr<tabnn_netlist, NetlistDeleter>;

struct Options {
  std::string config;
  std::string out;
  std::vector<std::string> sets;
  std::int64_t seed = -1;
  std::string checkpoint;
  std::string netlist;
  std::string report;
  std::vector<std::uint64_t> seeds;
  unsigned threads = 0;
  int k = 6;
  std::size_t cap = 100;
};

int Report(tabnn_status s) {
  if (s != TABNN_OK) std::fprintf(stderr, "error: %s\n", tabnn_last_error());
  return static_cast<int>(s);
}

bool WriteText(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (f == nullptr) return false;
  const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
  return std::fclose(f) == 0 && ok;
}

std::string TakeString(char* s) {
  std::string out = s != nullptr ? s : "";
  tabnn_string_free(s);
  return out;
}

tabnn_status LoadConfig(const Options& o, ConfigPtr& config) {
  std::vector<std::string> sets = o.sets;
  if (o.seed >= 0) sets.push_back("training.seed=" + std::to_string(o.seed));
  if (!o.out.empty()) sets.push_back("output.dir=\"" + o.out + "\"");
  std::vector<const char*> argv;
  for (const auto& s : sets) argv.push_back(s.c_str());
  tabnn_config* raw = nullptr;
  const tabnn_status s = tabnn_config_load(o.config.c_str(), argv.data(), argv.size(), &raw);
  config.reset(raw);
  return s;
}

tabnn_status LoadData(const tabnn_config* config, DataPtr& data) {
  tabnn_data* raw = nullptr;
  const tabnn_status s = tabnn_data_prepare(config, &raw);
  data.reset(raw);
  if (s == TABNN_OK) {
    for (std::size_t i = 0; i < tabnn_data_warning_count(raw); ++i) {
      std::fprintf(stderr, "warning: %s\n", tabnn_data_warning(raw, i));
    }
  }
  return s;
}

tabnn_status LoadModel(const std::string& path, ModelPtr& model) {
  tabnn_model* raw = nullptr;
  const tabnn_status s = tabnn_model_load(path.c_str(), &raw);
  model.reset(raw);
  return s;
}

int CmdTrain(const Options& o) {
  ConfigPtr config;
  DataPtr data;
  if (tabnn_status s = LoadConfig(o, config); s != TABNN_OK) return Report(s);
  if (tabnn_status s = LoadData(config.get(), data); s != TABNN_OK) return Report(s);
  tabnn_train_summary summary{};
  if (tabnn_status s = tabnn_train(config.get(), data.get(), &summary); s != TABNN_OK) {
    return Report(s);
  }
  std::printf("test accuracy: %.4f\nfinal train loss: %.6f\n", summary.test_accuracy,
              summary.train_loss);
  return 0;
}

int CmdCompile(const Options& o) {
  ModelPtr model;
  if (tabnn_status s = LoadModel(o.checkpoint, model); s != TABNN_OK) return Report(s);
  tabnn_netlist* raw = nullptr;
  const tabnn_status s = tabnn_compile(model.get(), o.threads, &raw);
  NetlistPtr netlist(raw);
  if (s != TABNN_OK) return Report(s);
  std::string dir = o.out;
  if (dir.empty()) dir = std::filesystem::path(o.checkpoint).parent_path().string();
  if (dir.empty()) dir = ".";
  const std::string ir = (std::filesystem::path(dir) / "netlist.json").string();
  const std::string rtl = (std::filesystem::path(dir) / "verilog").string();
  if (tabnn_status e = tabnn_netlist_save(netlist.get(), ir.c_str()); e != TABNN_OK) {
    return Report(e);
  }
  if (tabnn_status e = tabnn_netlist_emit_verilog(netlist.get(), rtl.c_str()); e != TABNN_OK) {
    return Report(e);
  }
  tabnn_cost cost{};
  if (tabnn_status e = tabnn_netlist_cost(netlist.get(), o.k, &cost); e != TABNN_OK) {
    return Report(e);
  }
  std::printf("netlist: %s\nverilog: %s\n", ir.c_str(), rtl.c_str());
  std::printf("L-LUTs: %llu\nP-LUTs (k=%d, upper bound): %llu\nlatency: %d cycles\n",
              static_cast<unsigned long long>(cost.llut_count), cost.k,
              static_cast<unsigned long long>(cost.plut_count), cost.latency_cycles);
  return 0;
}

int CmdVerify(const Options& o) {
  ConfigPtr config;
  DataPtr data;
  ModelPtr model;
  if (tabnn_status s = LoadConfig(o, config); s != TABNN_OK) return Report(s);
  if (tabnn_status s = LoadData(config.get(), data); s != TABNN_OK) return Report(s);
  if (tabnn_status s = LoadModel(o.checkpoint, model); s != TABNN_OK) return Report(s);
  tabnn_netlist* raw = nullptr;
  tabnn_status s = tabnn_netlist_load(o.netlist.c_str(), &raw);
  NetlistPtr netlist(raw);
  if (s != TABNN_OK) return Report(s);
  tabnn_verify_summary summary{};
  char* text = nullptr;
  s = tabnn_verify(model.get(), netlist.get(), data.get(), o.cap, &summary, &text);
  const std::string report = TakeString(text);
  if (!report.empty()) {
    if (!o.report.empty()) {
      if (!WriteText(o.report, report)) {
        std::fprintf(stderr, "error: cannot write %s\n", o.report.c_str());
        return TABNN_ERR_IO;
      }
    } else {
      std::fputs(report.c_str(), stdout);
    }
    std::printf("%s: %zu samples, %llu table entries, latency %d cycles\n",
                summary.pass ? "PASS" : "FAIL", summary.samples_checked,
                static_cast<unsigned long long>(summary.table_entries_checked),
                summary.latency_cycles);
  }
  return Report(s);
}

int CmdSweep(const Options& o) {
  if (o.seeds.size() < 2) {
    std::fprintf(stderr, "error: --seeds needs at least two seeds\n");
    return TABNN_ERR_CONFIG;
  }
  ConfigPtr config;
  DataPtr data;
  if (tabnn_status s = LoadConfig(o, config); s != TABNN_OK) return Report(s);
  if (tabnn_status s = LoadData(config.get(), data); s != TABNN_OK) return Report(s);
  tabnn_sweep_summary summary{};
  char* text = nullptr;
  const tabnn_status s = tabnn_sweep(config.get(), data.get(), o.seeds.data(), o.seeds.size(),
                                     o.threads, &summary, &text);
  const std::string report = TakeString(text);
  if (s != TABNN_OK) return Report(s);
  std::fputs(report.c_str(), stdout);
  if (!o.report.empty() && !WriteText(o.report, report)) {
    std::fprintf(stderr, "error: cannot write %s\n", o.report.c_str());
    return TABNN_ERR_IO;
  }
  if (summary.failed > 0) std::fprintf(stderr, "warning: %zu runs failed\n", summary.failed);
  return 0;
}

int CmdEval(const Options& o) {
  ConfigPtr config;
  DataPtr data;
  ModelPtr model;
  if (tabnn_status s = LoadConfig(o, config); s != TABNN_OK) return Report(s);
  if (tabnn_status s = LoadData(config.get(), data); s != TABNN_OK) return Report(s);
  if (tabnn_status s = LoadModel(o.checkpoint, model); s != TABNN_OK) return Report(s);
  double code_acc = 0.0, score_acc = 0.0;
  if (tabnn_status s = tabnn_eval(model.get(), data.get(), &code_acc, &score_acc);
      s != TABNN_OK) {
    return Report(s);
  }
  std::printf("test rows: %zu\naccuracy (output codes): %.4f\naccuracy (scores): %.4f\n",
              tabnn_data_test_rows(data.get()), code_acc, score_acc);
  if (!o.netlist.empty()) {
    tabnn_netlist* raw = nullptr;
    tabnn_status s = tabnn_netlist_load(o.netlist.c_str(), &raw);
    NetlistPtr netlist(raw);
    if (s != TABNN_OK) return Report(s);
    double net_acc = 0.0;
    s = tabnn_netlist_accuracy(netlist.get(), data.get(), &net_acc);
    if (s != TABNN_OK) return Report(s);
    std::printf("accuracy (netlist): %.4f\n", net_acc);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tabnn: train sparse polynomial LUT networks and compile them to Verilog"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tabnn_version());
  Options o;

  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "Pipeline config (JSON)")->required();
    cmd->add_option("--set", o.sets, "Override a config key, e.g. training.lr_max=0.02");
    cmd->add_option("--seed", o.seed, "Override training.seed");
  };

  CLI::App* train = app.add_subcommand("train", "Dense training, pruning and retraining");
  add_config(train);
  train->add_option("--out", o.out, "Artifact directory (overrides output.dir)");

  CLI::App* compile = app.add_subcommand("compile", "Compile a sparse checkpoint to a netlist and Verilog");
  compile->add_option("--checkpoint", o.checkpoint, "Sparse checkpoint")->required();
  compile->add_option("--out", o.out, "Output directory (default: next to the checkpoint)");
  compile->add_option("--k", o.k, "P-LUT input count for the cost estimate")->check(CLI::Range(2, 16));
  compile->add_option("--threads", o.threads, "Compile threads (0 = all cores)");

  CLI::App* verify = app.add_subcommand("verify", "Check a netlist against its checkpoint");
  add_config(verify);
  verify->add_option("--checkpoint", o.checkpoint, "Sparse checkpoint")->required();
  verify->add_option("--netlist", o.netlist, "Netlist IR file")->required();
  verify->add_option("--report", o.report, "Write the report here instead of stdout");
  verify->add_option("--cap", o.cap, "Maximum listed mismatches");

  CLI::App* sweep = app.add_subcommand("sweep", "Run the pipeline for several seeds");
  add_config(sweep);
  sweep->add_option("--seeds", o.seeds, "Seed list, e.g. 1,2,3")->delimiter(',')->required();
  sweep->add_option("--report", o.report, "Also write the report to this file");
  sweep->add_option("--threads", o.threads, "Parallel runs (0 = all cores)");

  CLI::App* eval = app.add_subcommand("eval", "Test accuracy of a checkpoint (and netlist)");
  add_config(eval);
  eval->add_option("--checkpoint", o.checkpoint, "Checkpoint")->required();
  eval->add_option("--netlist", o.netlist, "Netlist IR file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : TABNN_ERR_CONFIG;
  }

  if (*train) return CmdTrain(o);
  if (*compile) return CmdCompile(o);
  if (*verify) return CmdVerify(o);
  if (*sweep) return CmdSweep(o);
  return CmdEval(o);
}
