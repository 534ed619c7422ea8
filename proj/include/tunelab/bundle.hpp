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

#include <memory>
#include <string>

#include "tunelab/bpe.hpp"
#include "tunelab/model.hpp"
#include "tunelab/strategy.hpp"

namespace tunelab {

/// A model bundle is a directory with everything needed to run a trained
/// model: `config.cfg` (architecture plus prefix length), `model.ckpt`
/// (all parameter tensors, the prefix bank included) and `vocab.tl`.
struct ModelBundle {
  std::unique_ptr<Model> model;
  std::unique_ptr<PrefixBank> bank;  // attached to the model when present
  SubwordVocabulary vocab;
};

void save_model_bundle(const Model& model, const SubwordVocabulary& vocab,
                       const std::string& dir);

/// Rebuilds the model, reattaches the prefix bank if one was saved, and
/// restores parameter values and frozen flags.
ModelBundle load_model_bundle(const std::string& dir);

}  // namespace tunelab
