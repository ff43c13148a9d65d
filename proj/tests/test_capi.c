/*
 * Copyright 2026 The tabnn Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* Exercises the shared library through its C header only. */

#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <unistd.h>

#include "tabnn/tabnn.h"

static int failures = 0;

#define CHECK(cond)                                                   \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: CHECK(%s) failed: %s\n", __FILE__,      \
              __LINE__, #cond, tabnn_last_error());                   \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

static const char* kConfig =
    "{\"dataset\": {\"kind\": \"spiral\", \"n_per_class\": 80},"
    " \"architecture\": {\"widths\": [6, 2], \"bits\": 2, \"fan_in\": 2,"
    "                    \"degree\": 2, \"input_bits\": 4},"
    " \"training\": {\"epochs_dense\": 2, \"epochs_retrain\": 3, \"batch_size\": 16},"
    " \"output\": {\"stem\": \"capi\"}}";

int main(void) {
  char dir[64];
  snprintf(dir, sizeof dir, "/tmp/tabnn_capi_%ld", (long)getpid());
  char out_set[128];
  snprintf(out_set, sizeof out_set, "output.dir=\"%s\"", dir);
  const char* sets[] = {out_set, "training.seed=3"};

  CHECK(strlen(tabnn_version()) > 0);

  tabnn_config* config = NULL;
  CHECK(tabnn_config_parse(kConfig, sets, 2, &config) == TABNN_OK);
  char* text = NULL;
  CHECK(tabnn_config_serialize(config, &text) == TABNN_OK);
  CHECK(text != NULL && strstr(text, "\"seed\": 3") != NULL);
  tabnn_string_free(text);

  tabnn_config* bad = NULL;
  CHECK(tabnn_config_parse("{\"training\": {\"batch_size\": 0}}", NULL, 0, &bad) ==
        TABNN_ERR_CONFIG);
  CHECK(strstr(tabnn_last_error(), "batch_size") != NULL);
  CHECK(tabnn_config_load("/nonexistent/x.json", NULL, 0, &bad) == TABNN_ERR_IO);
  CHECK(tabnn_config_parse(NULL, NULL, 0, &bad) == TABNN_ERR_CONFIG);

  tabnn_data* data = NULL;
  CHECK(tabnn_data_prepare(config, &data) == TABNN_OK);
  CHECK(tabnn_data_test_rows(data) == 32);

  tabnn_train_summary summary;
  CHECK(tabnn_train(config, data, &summary) == TABNN_OK);
  CHECK(summary.has_dense == 1);
  CHECK(summary.test_accuracy >= 0.0 && summary.test_accuracy <= 1.0);

  char path[256];
  tabnn_model* dense = NULL;
  snprintf(path, sizeof path, "%s/capi_dense.json", dir);
  CHECK(tabnn_model_load(path, &dense) == TABNN_OK);
  CHECK(tabnn_model_is_sparse(dense) == 0);
  tabnn_netlist* refused = NULL;
  CHECK(tabnn_compile(dense, 1, &refused) == TABNN_ERR_CONFIG);
  CHECK(strstr(tabnn_last_error(), "dense") != NULL);

  tabnn_model* model = NULL;
  snprintf(path, sizeof path, "%s/capi_sparse.json", dir);
  CHECK(tabnn_model_load(path, &model) == TABNN_OK);
  CHECK(tabnn_model_is_sparse(model) == 1);
  CHECK(tabnn_model_layers(model) == 2);

  double code_acc = -1.0, score_acc = -1.0;
  CHECK(tabnn_eval(model, data, &code_acc, &score_acc) == TABNN_OK);
  CHECK(code_acc == summary.test_accuracy);

  tabnn_netlist* net = NULL;
  CHECK(tabnn_compile(model, 0, &net) == TABNN_OK);
  CHECK(tabnn_netlist_nodes(net) == 8);
  tabnn_cost cost;
  CHECK(tabnn_netlist_cost(net, 6, &cost) == TABNN_OK);
  CHECK(cost.latency_cycles == 2);
  CHECK(cost.llut_count == 8);

  snprintf(path, sizeof path, "%s/netlist.json", dir);
  CHECK(tabnn_netlist_save(net, path) == TABNN_OK);
  tabnn_netlist* loaded = NULL;
  CHECK(tabnn_netlist_load(path, &loaded) == TABNN_OK);
  snprintf(path, sizeof path, "%s/verilog", dir);
  CHECK(tabnn_netlist_emit_verilog(loaded, path) == TABNN_OK);

  tabnn_verify_summary vs;
  char* report = NULL;
  CHECK(tabnn_verify(model, loaded, data, 10, &vs, &report) == TABNN_OK);
  CHECK(vs.pass == 1);
  CHECK(vs.samples_checked == 32);
  CHECK(vs.latency_cycles == 2);
  CHECK(report != NULL && strstr(report, "tabnn-equivalence") != NULL);
  tabnn_string_free(report);

  double net_acc = -1.0;
  CHECK(tabnn_netlist_accuracy(loaded, data, &net_acc) == TABNN_OK);
  CHECK(net_acc == code_acc);

  CHECK(tabnn_verify(dense, loaded, data, 10, &vs, NULL) == TABNN_ERR_MISMATCH);

  char* hash = NULL;
  CHECK(tabnn_model_hash(model, &hash) == TABNN_OK);
  CHECK(hash != NULL && strlen(hash) == 16);
  tabnn_string_free(hash);

  const uint64_t seeds[] = {1, 2};
  tabnn_sweep_summary sweep;
  char* sweep_text = NULL;
  CHECK(tabnn_sweep(config, data, seeds, 2, 2, &sweep, &sweep_text) == TABNN_OK);
  CHECK(sweep.failed == 0);
  CHECK(sweep_text != NULL && strstr(sweep_text, "seed,status") != NULL);
  tabnn_string_free(sweep_text);
  CHECK(tabnn_sweep(config, data, seeds, 1, 1, &sweep, NULL) == TABNN_ERR_CONFIG);

  tabnn_netlist_free(loaded);
  tabnn_netlist_free(net);
  tabnn_model_free(model);
  tabnn_model_free(dense);
  tabnn_data_free(data);
  tabnn_config_free(config);

  char cmd[128];
  snprintf(cmd, sizeof cmd, "rm -rf %s", dir);
  if (system(cmd) != 0) ++failures;

  if (failures == 0) printf("all C API checks passed\n");
  return failures == 0 ? 0 : 1;
}
