// Copyright 2026 The GUR Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

#include "gur/model.hpp"

namespace gur {

class CheckpointError : public std::runtime_error {
 public:
  explicit CheckpointError(const std::string& msg)
      : std::runtime_error("corrupt checkpoint: " + msg) {}
};

// Checkpoint layout: <dir>/manifest.json carries the model config, the
// vocabulary, the parameter table (name/rows/cols in storage order) and an
// FNV-1a hash of the weight bytes; <dir>/params.bin is the concatenation of
// all parameters as little-endian float32 in table order.
void save_checkpoint(const GurModel<float>& model, const std::string& dir);

// Throws CheckpointError on missing files, hash mismatch, truncation or a
// parameter table that does not match the declared config. When `expected`
// is given, the stored config must equal it exactly.
GurModel<float> load_checkpoint(const std::string& dir,
                                const ModelConfig* expected = nullptr);

}  // namespace gur
