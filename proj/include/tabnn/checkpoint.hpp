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

// Model checkpoints and mask files.
//
// A checkpoint is a single-line JSON document (format "tabnn-checkpoint",
// version 1) holding the options, input quantizer, and per layer the config,
// mask, weights, BN parameters and running statistics, and act_scale. Reals
// are printed in shortest round-trip form, so save/load is bit-exact.

#ifndef TABNN_CHECKPOINT_HPP
#define TABNN_CHECKPOINT_HPP

#include <string>
#include <string_view>
#include <vector>

#include "tabnn/model.hpp"

namespace tabnn {

inline constexpr int kCheckpointVersion = 1;

std::string SerializeModel(const Model& model);
Model ParseModel(std::string_view text);

void SaveModel(const Model& model, const std::string& path);
Model LoadModel(const std::string& path);

// 16 hex digits of FNV-1a/64 over SerializeModel(model).
std::string ModelHash(const Model& model);

std::string SerializeMasks(const std::vector<SparseMask>& masks);
std::vector<SparseMask> ParseMasks(std::string_view text);

// Whole-file helpers; throw IoError.
std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, std::string_view contents);

std::string Fnv1a64Hex(std::string_view bytes);

}  // namespace tabnn

#endif  // TABNN_CHECKPOINT_HPP
