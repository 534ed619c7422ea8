/*
 * Copyright 2026 Tunelab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <string>
#include <vector>

#include "tunelab/parameter.hpp"

namespace tunelab {

/// One parameter as stored in a checkpoint file.
struct CheckpointEntry {
  std::string id;
  BlockLabel block;
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool frozen = false;
  std::vector<double> data;
};

/// Checkpoint files carry a plain-text key-value manifest (one line per
/// parameter: id, block label, shape, payload offset, frozen flag) followed
/// by a single little-endian float64 payload. Round trips are bit-exact.
void save_checkpoint(const std::vector<const Parameter*>& params,
                     const std::string& path);

std::vector<CheckpointEntry> load_checkpoint(const std::string& path);

/// In-memory snapshot helpers used by training (restore-best) and by drift
/// reporting; they share the entry type with the file format.
std::vector<CheckpointEntry> snapshot(
    const std::vector<const Parameter*>& params);
void restore(const std::vector<CheckpointEntry>& entries,
             const std::vector<Parameter*>& params);

}  // namespace tunelab
