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

#include "tunelab/bundle.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "tunelab/checkpoint.hpp"
#include "tunelab/config.hpp"
#include "tunelab/error.hpp"

namespace tunelab {

namespace {

namespace fs = std::filesystem;

}  // namespace

void save_model_bundle(const Model& model, const SubwordVocabulary& vocab,
                       const std::string& dir) {
  fs::create_directories(dir);
  vocab.save(dir + "/vocab.tl");

  const ModelConfig& cfg = model.config();
  const PrefixBank* bank = model.attached_prefix();
  std::ostringstream text;
  text << "vocab_size = " << cfg.vocab_size << "\n";
  text << "d_model = " << cfg.d_model << "\n";
  text << "num_heads = " << cfg.num_heads << "\n";
  text << "ffn_dim = " << cfg.ffn_dim << "\n";
  text << "encoder_layers = " << cfg.encoder_layers << "\n";
  text << "decoder_layers = " << cfg.decoder_layers << "\n";
  text << "max_positions = " << cfg.max_positions << "\n";
  text << "tie_output_to_embedding = "
       << (cfg.tie_output_to_embedding ? "true" : "false") << "\n";
  text << "prefix_length = " << (bank ? bank->prefix_length() : 0) << "\n";
  std::ofstream out(dir + "/config.cfg");
  if (!out) fail(ErrorCode::Io, "cannot write " + dir + "/config.cfg");
  out << text.str();
  if (!out) fail(ErrorCode::Io, "failed while writing " + dir + "/config.cfg");

  save_checkpoint(model.parameters(), dir + "/model.ckpt");
}

ModelBundle load_model_bundle(const std::string& dir) {
  const KeyValueFile kv = KeyValueFile::parse_file(dir + "/config.cfg");
  const ModelConfig cfg = ModelConfig::from_kv(kv);
  const std::size_t prefix_length =
      static_cast<std::size_t>(kv.get_int("prefix_length", 0));

  ModelBundle bundle{std::make_unique<Model>(cfg, 0), nullptr,
                     SubwordVocabulary::load(dir + "/vocab.tl")};
  if (prefix_length > 0) {
    bundle.bank = std::make_unique<PrefixBank>(
        cfg.encoder_layers, cfg.decoder_layers, prefix_length, cfg.d_model);
    bundle.model->attach_prefix(bundle.bank.get());
  }

  const std::vector<CheckpointEntry> entries =
      load_checkpoint(dir + "/model.ckpt");
  std::map<std::string, const CheckpointEntry*> by_id;
  for (const CheckpointEntry& entry : entries) by_id[entry.id] = &entry;

  std::vector<Parameter*> params = bundle.model->parameters();
  if (params.size() != entries.size()) {
    fail(ErrorCode::InvalidArgument,
         "model bundle checkpoint has " + std::to_string(entries.size()) +
             " parameters but the configuration builds " +
             std::to_string(params.size()));
  }
  restore(entries, params);
  for (Parameter* p : params) p->frozen = by_id.at(p->id)->frozen;
  return bundle;
}

}  // namespace tunelab
