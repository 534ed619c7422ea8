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

#include "tunelab/model.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "tunelab/error.hpp"

namespace tunelab {

namespace {

constexpr double kInitStd = 0.02;
constexpr double kMaskValue = -1e9;

std::vector<int> iota_ids(std::size_t n) {
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

}  // namespace

void ModelConfig::validate() const {
  if (vocab_size == 0 || d_model == 0 || num_heads == 0 || ffn_dim == 0 ||
      encoder_layers == 0 || decoder_layers == 0 || max_positions == 0) {
    fail(ErrorCode::InvalidArgument,
         "model config: all dimensions must be positive");
  }
  if (d_model % num_heads != 0) {
    fail(ErrorCode::InvalidArgument,
         "model config: d_model must be divisible by num_heads");
  }
}

ModelConfig ModelConfig::from_kv(const KeyValueFile& kv) {
  ModelConfig cfg;
  cfg.vocab_size = static_cast<std::size_t>(kv.require_int("vocab_size"));
  cfg.d_model = static_cast<std::size_t>(kv.require_int("d_model"));
  cfg.num_heads = static_cast<std::size_t>(kv.require_int("num_heads"));
  cfg.ffn_dim = static_cast<std::size_t>(kv.require_int("ffn_dim"));
  cfg.encoder_layers =
      static_cast<std::size_t>(kv.require_int("encoder_layers"));
  cfg.decoder_layers =
      static_cast<std::size_t>(kv.require_int("decoder_layers"));
  cfg.max_positions = static_cast<std::size_t>(kv.require_int("max_positions"));
  cfg.tie_output_to_embedding = kv.get_bool("tie_output_to_embedding", true);
  cfg.validate();
  return cfg;
}

ParamCounts count_parameters(const ModelConfig& config, StrategyKind strategy,
                             std::size_t prefix_length) {
  config.validate();
  const std::uint64_t d = config.d_model;
  const std::uint64_t f = config.ffn_dim;
  const std::uint64_t v = config.vocab_size;
  const std::uint64_t p = config.max_positions;
  const std::uint64_t e = config.encoder_layers;
  const std::uint64_t dec = config.decoder_layers;

  const std::uint64_t attn = 4 * d * d + 4 * d;        // q,k,v,o + biases
  const std::uint64_t ffn = d * f + f + f * d + d;     // two linear layers
  const std::uint64_t ln = 2 * d;                      // gain + bias
  const std::uint64_t enc_block = attn + 2 * ln + ffn;
  const std::uint64_t dec_block = 2 * attn + 3 * ln + ffn;

  const std::uint64_t embeddings = v * d + 2 * p * d;
  const std::uint64_t output = config.tie_output_to_embedding ? 0 : v * d;
  const std::uint64_t base =
      embeddings + e * enc_block + dec * dec_block + output;

  ParamCounts counts;
  switch (strategy) {
    case StrategyKind::Custom:
      counts.total = base;
      counts.trainable = base;
      break;
    case StrategyKind::LEO:
      counts.total = base;
      counts.trainable = embeddings + output;
      break;
    case StrategyKind::LLDB:
      counts.total = base;
      counts.trainable = dec_block;
      break;
    case StrategyKind::Prefix: {
      if (prefix_length == 0) {
        fail(ErrorCode::InvalidArgument,
             "count_parameters: prefix strategy requires prefix_length > 0");
      }
      const std::uint64_t bank =
          d * prefix_length * (e + dec) * 2;  // key and value streams
      counts.total = base + bank;
      counts.trainable = bank;
      break;
    }
  }
  return counts;
}

ParameterRegistry config_registry(const ModelConfig& config,
                                  std::size_t prefix_length) {
  config.validate();
  ParameterRegistry reg;
  auto add = [&reg](const std::string& id, BlockLabel block, std::size_t rows,
                    std::size_t cols) {
    reg.push_back({id, block, rows, cols, rows * cols, false});
  };
  auto add_attention = [&add](const std::string& stem, BlockLabel block,
                              std::size_t d) {
    add(stem + ".wq", block, d, d);
    add(stem + ".bq", block, 1, d);
    add(stem + ".wk", block, d, d);
    add(stem + ".bk", block, 1, d);
    add(stem + ".wv", block, d, d);
    add(stem + ".bv", block, 1, d);
    add(stem + ".wo", block, d, d);
    add(stem + ".bo", block, 1, d);
  };

  const std::size_t d = config.d_model;
  const std::size_t f = config.ffn_dim;
  add("tok_emb", BlockLabel::token_embedding(), config.vocab_size, d);
  add("pos_emb.encoder", BlockLabel::positional_embedding(),
      config.max_positions, d);
  add("pos_emb.decoder", BlockLabel::positional_embedding(),
      config.max_positions, d);
  for (std::size_t i = 0; i < config.encoder_layers; ++i) {
    const BlockLabel block = BlockLabel::encoder_block(static_cast<int>(i));
    const std::string stem = "enc" + std::to_string(i);
    add(stem + ".ln1.gain", block, 1, d);
    add(stem + ".ln1.bias", block, 1, d);
    add_attention(stem + ".self", block, d);
    add(stem + ".ln2.gain", block, 1, d);
    add(stem + ".ln2.bias", block, 1, d);
    add(stem + ".ffn.w1", block, d, f);
    add(stem + ".ffn.b1", block, 1, f);
    add(stem + ".ffn.w2", block, f, d);
    add(stem + ".ffn.b2", block, 1, d);
  }
  for (std::size_t j = 0; j < config.decoder_layers; ++j) {
    const BlockLabel block = BlockLabel::decoder_block(static_cast<int>(j));
    const std::string stem = "dec" + std::to_string(j);
    add(stem + ".ln1.gain", block, 1, d);
    add(stem + ".ln1.bias", block, 1, d);
    add_attention(stem + ".self", block, d);
    add(stem + ".ln2.gain", block, 1, d);
    add(stem + ".ln2.bias", block, 1, d);
    add_attention(stem + ".cross", block, d);
    add(stem + ".ln3.gain", block, 1, d);
    add(stem + ".ln3.bias", block, 1, d);
    add(stem + ".ffn.w1", block, d, f);
    add(stem + ".ffn.b1", block, 1, f);
    add(stem + ".ffn.w2", block, f, d);
    add(stem + ".ffn.b2", block, 1, d);
  }
  if (!config.tie_output_to_embedding) {
    add("out_proj", BlockLabel::output_layer(), config.vocab_size, d);
  }
  if (prefix_length > 0) {
    for (std::size_t i = 0;
         i < config.encoder_layers + config.decoder_layers; ++i) {
      const bool is_encoder = i < config.encoder_layers;
      const std::size_t block =
          is_encoder ? i : i - config.encoder_layers;
      const std::string stem =
          std::string("prefix.") +
          (is_encoder
               ? BlockLabel::encoder_block(static_cast<int>(block)).str()
               : BlockLabel::decoder_block(static_cast<int>(block)).str());
      add(stem + ".key", BlockLabel::prefix(), prefix_length, d);
      add(stem + ".value", BlockLabel::prefix(), prefix_length, d);
    }
  }
  return reg;
}

Parameter* Model::add_param(const std::string& id, BlockLabel block,
                            std::size_t rows, std::size_t cols) {
  params_.push_back(
      std::make_unique<Parameter>(id, block, Tensor(rows, cols)));
  return params_.back().get();
}

Model::AttnParams Model::add_attention(const std::string& stem,
                                       BlockLabel block) {
  const std::size_t d = cfg_.d_model;
  AttnParams p;
  p.wq = add_param(stem + ".wq", block, d, d);
  p.bq = add_param(stem + ".bq", block, 1, d);
  p.wk = add_param(stem + ".wk", block, d, d);
  p.bk = add_param(stem + ".bk", block, 1, d);
  p.wv = add_param(stem + ".wv", block, d, d);
  p.bv = add_param(stem + ".bv", block, 1, d);
  p.wo = add_param(stem + ".wo", block, d, d);
  p.bo = add_param(stem + ".bo", block, 1, d);
  return p;
}

Model::Model(const ModelConfig& config, std::uint64_t seed) : cfg_(config) {
  cfg_.validate();
  const std::size_t d = cfg_.d_model;
  const std::size_t f = cfg_.ffn_dim;

  tok_emb_ = add_param("tok_emb", BlockLabel::token_embedding(),
                       cfg_.vocab_size, d);
  enc_pos_ = add_param("pos_emb.encoder", BlockLabel::positional_embedding(),
                       cfg_.max_positions, d);
  dec_pos_ = add_param("pos_emb.decoder", BlockLabel::positional_embedding(),
                       cfg_.max_positions, d);

  for (std::size_t i = 0; i < cfg_.encoder_layers; ++i) {
    const BlockLabel block = BlockLabel::encoder_block(static_cast<int>(i));
    const std::string stem = "enc" + std::to_string(i);
    BlockParams bp{};
    bp.ln1_gain = add_param(stem + ".ln1.gain", block, 1, d);
    bp.ln1_bias = add_param(stem + ".ln1.bias", block, 1, d);
    bp.self_attn = add_attention(stem + ".self", block);
    bp.ln2_gain = add_param(stem + ".ln2.gain", block, 1, d);
    bp.ln2_bias = add_param(stem + ".ln2.bias", block, 1, d);
    bp.ffn_w1 = add_param(stem + ".ffn.w1", block, d, f);
    bp.ffn_b1 = add_param(stem + ".ffn.b1", block, 1, f);
    bp.ffn_w2 = add_param(stem + ".ffn.w2", block, f, d);
    bp.ffn_b2 = add_param(stem + ".ffn.b2", block, 1, d);
    encoder_.push_back(bp);
  }
  for (std::size_t j = 0; j < cfg_.decoder_layers; ++j) {
    const BlockLabel block = BlockLabel::decoder_block(static_cast<int>(j));
    const std::string stem = "dec" + std::to_string(j);
    BlockParams bp{};
    bp.ln1_gain = add_param(stem + ".ln1.gain", block, 1, d);
    bp.ln1_bias = add_param(stem + ".ln1.bias", block, 1, d);
    bp.self_attn = add_attention(stem + ".self", block);
    bp.ln2_gain = add_param(stem + ".ln2.gain", block, 1, d);
    bp.ln2_bias = add_param(stem + ".ln2.bias", block, 1, d);
    bp.cross_attn = add_attention(stem + ".cross", block);
    bp.ln3_gain = add_param(stem + ".ln3.gain", block, 1, d);
    bp.ln3_bias = add_param(stem + ".ln3.bias", block, 1, d);
    bp.ffn_w1 = add_param(stem + ".ffn.w1", block, d, f);
    bp.ffn_b1 = add_param(stem + ".ffn.b1", block, 1, f);
    bp.ffn_w2 = add_param(stem + ".ffn.w2", block, f, d);
    bp.ffn_b2 = add_param(stem + ".ffn.b2", block, 1, d);
    decoder_.push_back(bp);
  }
  if (!cfg_.tie_output_to_embedding) {
    out_proj_ = add_param("out_proj", BlockLabel::output_layer(),
                          cfg_.vocab_size, d);
  }

  // Deterministic initialization: iterate parameters in registration order
  // with one generator. Layernorm gains start at one, biases at zero,
  // everything else is a small normal draw.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, kInitStd);
  for (std::unique_ptr<Parameter>& p : params_) {
    const std::string& id = p->id;
    const bool is_gain = id.size() > 5 && id.rfind(".gain") == id.size() - 5;
    const bool is_bias =
        (id.size() > 5 && id.rfind(".bias") == id.size() - 5) ||
        (id.size() > 3 && id[id.size() - 3] == '.' &&
         id[id.size() - 2] == 'b');
    if (is_gain) {
      p->value.fill(1.0);
    } else if (is_bias) {
      p->value.fill(0.0);
    } else {
      double* data = p->value.data();
      for (std::size_t i = 0; i < p->value.size(); ++i) data[i] = dist(rng);
    }
  }
}

Model Model::clone() const {
  Model copy(cfg_, 0);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    copy.params_[i]->value = params_[i]->value;
    copy.params_[i]->frozen = params_[i]->frozen;
  }
  return copy;
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (const std::unique_ptr<Parameter>& p : params_) out.push_back(p.get());
  if (prefix_ != nullptr) {
    for (Parameter* p : prefix_->parameters()) out.push_back(p);
  }
  return out;
}

std::vector<const Parameter*> Model::parameters() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const std::unique_ptr<Parameter>& p : params_) out.push_back(p.get());
  if (prefix_ != nullptr) {
    for (const Parameter* p :
         static_cast<const PrefixBank*>(prefix_)->parameters()) {
      out.push_back(p);
    }
  }
  return out;
}

Parameter* Model::find_parameter(const std::string& id) {
  for (Parameter* p : parameters()) {
    if (p->id == id) return p;
  }
  return nullptr;
}

ParameterRegistry Model::registry() const {
  ParameterRegistry reg;
  for (const Parameter* p : parameters()) {
    RegistryEntry entry;
    entry.id = p->id;
    entry.block = p->block;
    entry.rows = p->value.rows();
    entry.cols = p->value.cols();
    entry.count = p->value.size();
    entry.frozen = p->frozen;
    reg.push_back(std::move(entry));
  }
  return reg;
}

const Tensor& Model::token_embedding() const { return tok_emb_->value; }

void Model::apply_freeze_plan(const FreezePlan& plan) {
  if (prefix_ != nullptr && plan.strategy != StrategyKind::Prefix) {
    fail(ErrorCode::InvalidArgument,
         "apply_freeze_plan: a prefix bank is attached but the plan does "
         "not train a prefix");
  }
  for (const std::unique_ptr<Parameter>& p : params_) {
    p->frozen = !plan.trainable(p->block);
    if (p->frozen) p->clear_grad();
  }
  if (prefix_ != nullptr) {
    const bool trainable = plan.trainable(BlockLabel::prefix());
    for (Parameter* p : prefix_->parameters()) {
      p->frozen = !trainable;
      if (p->frozen) p->clear_grad();
    }
  }
}

void Model::attach_prefix(PrefixBank* bank) {
  if (bank == nullptr) {
    fail(ErrorCode::InvalidArgument, "attach_prefix: null bank");
  }
  if (bank->d_model() != cfg_.d_model ||
      bank->encoder_blocks() != cfg_.encoder_layers ||
      bank->decoder_blocks() != cfg_.decoder_layers) {
    fail(ErrorCode::Shape, "attach_prefix: bank does not match model shape");
  }
  prefix_ = bank;
}

Graph::NodeId Model::attention(Graph& g, const AttnParams& p,
                               Graph::NodeId queries, Graph::NodeId keys_values,
                               bool causal, const Parameter* prefix_key,
                               const Parameter* prefix_value) const {
  const std::size_t d = cfg_.d_model;
  const std::size_t heads = cfg_.num_heads;
  const std::size_t dh = d / heads;

  Graph::NodeId q = g.add(g.matmul(queries, g.param(*p.wq)), g.param(*p.bq));
  Graph::NodeId k =
      g.add(g.matmul(keys_values, g.param(*p.wk)), g.param(*p.bk));
  Graph::NodeId v =
      g.add(g.matmul(keys_values, g.param(*p.wv)), g.param(*p.bv));

  const std::size_t q_rows = g.value(q).rows();
  const std::size_t token_rows = g.value(k).rows();
  std::size_t prefix_rows = 0;
  if (prefix_key != nullptr) {
    prefix_rows = prefix_key->value.rows();
    k = g.concat(g.param(const_cast<Parameter&>(*prefix_key)), k, 0);
    v = g.concat(g.param(const_cast<Parameter&>(*prefix_value)), v, 0);
  }
  const std::size_t kv_rows = prefix_rows + token_rows;

  Graph::NodeId mask = -1;
  if (causal || (prefix_rows > 0 && prefix_masked_)) {
    Tensor m(q_rows, kv_rows);
    for (std::size_t i = 0; i < q_rows; ++i) {
      for (std::size_t j = 0; j < kv_rows; ++j) {
        if (j < prefix_rows) {
          m(i, j) = prefix_masked_ ? kMaskValue : 0.0;
        } else {
          m(i, j) = (causal && j - prefix_rows > i) ? kMaskValue : 0.0;
        }
      }
    }
    mask = g.input(std::move(m));
  }

  Graph::NodeId context = -1;
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t c0 = h * dh;
    const std::size_t c1 = (h + 1) * dh;
    Graph::NodeId qh = g.slice(q, 0, q_rows, c0, c1);
    Graph::NodeId kh = g.slice(k, 0, kv_rows, c0, c1);
    Graph::NodeId vh = g.slice(v, 0, kv_rows, c0, c1);
    Graph::NodeId scores = g.scale(g.matmul(qh, g.transpose(kh)),
                                   1.0 / std::sqrt(static_cast<double>(dh)));
    if (mask >= 0) scores = g.add(scores, mask);
    Graph::NodeId weights = g.softmax(scores);
    Graph::NodeId ctx = g.matmul(weights, vh);
    context = h == 0 ? ctx : g.concat(context, ctx, 1);
  }
  return g.add(g.matmul(context, g.param(*p.wo)), g.param(*p.bo));
}

Graph::NodeId Model::encoder_forward(Graph& g,
                                     std::span<const int> source) const {
  if (source.empty()) {
    fail(ErrorCode::InvalidArgument, "encoder: empty source sequence");
  }
  if (source.size() > cfg_.max_positions) {
    fail(ErrorCode::InvalidArgument, "encoder: source exceeds max_positions");
  }
  std::vector<int> src(source.begin(), source.end());
  Graph::NodeId x = g.add(g.embedding(g.param(*tok_emb_), src),
                          g.embedding(g.param(*enc_pos_), iota_ids(src.size())));
  for (std::size_t i = 0; i < encoder_.size(); ++i) {
    const BlockParams& bp = encoder_[i];
    const Parameter* pk = nullptr;
    const Parameter* pv = nullptr;
    if (prefix_ != nullptr) {
      pk = &prefix_->key(true, i);
      pv = &prefix_->value(true, i);
    }
    Graph::NodeId h = g.add(g.mul(g.layernorm(x), g.param(*bp.ln1_gain)),
                            g.param(*bp.ln1_bias));
    x = g.add(x, attention(g, bp.self_attn, h, h, /*causal=*/false, pk, pv));
    h = g.add(g.mul(g.layernorm(x), g.param(*bp.ln2_gain)),
              g.param(*bp.ln2_bias));
    Graph::NodeId ff = g.add(
        g.matmul(g.gelu(g.add(g.matmul(h, g.param(*bp.ffn_w1)),
                              g.param(*bp.ffn_b1))),
                 g.param(*bp.ffn_w2)),
        g.param(*bp.ffn_b2));
    x = g.add(x, ff);
  }
  return x;
}

Graph::NodeId Model::decoder_forward(Graph& g, Graph::NodeId encoder_out,
                                     std::span<const int> decoder_tokens) const {
  if (decoder_tokens.empty()) {
    fail(ErrorCode::InvalidArgument, "decoder: empty token sequence");
  }
  if (decoder_tokens.size() > cfg_.max_positions) {
    fail(ErrorCode::InvalidArgument, "decoder: sequence exceeds max_positions");
  }
  std::vector<int> toks(decoder_tokens.begin(), decoder_tokens.end());
  Graph::NodeId x =
      g.add(g.embedding(g.param(*tok_emb_), toks),
            g.embedding(g.param(*dec_pos_), iota_ids(toks.size())));
  for (std::size_t j = 0; j < decoder_.size(); ++j) {
    const BlockParams& bp = decoder_[j];
    const Parameter* pk = nullptr;
    const Parameter* pv = nullptr;
    if (prefix_ != nullptr) {
      pk = &prefix_->key(false, j);
      pv = &prefix_->value(false, j);
    }
    Graph::NodeId h = g.add(g.mul(g.layernorm(x), g.param(*bp.ln1_gain)),
                            g.param(*bp.ln1_bias));
    x = g.add(x, attention(g, bp.self_attn, h, h, /*causal=*/true, pk, pv));
    h = g.add(g.mul(g.layernorm(x), g.param(*bp.ln2_gain)),
              g.param(*bp.ln2_bias));
    x = g.add(x, attention(g, bp.cross_attn, h, encoder_out,
                           /*causal=*/false, nullptr, nullptr));
    h = g.add(g.mul(g.layernorm(x), g.param(*bp.ln3_gain)),
              g.param(*bp.ln3_bias));
    Graph::NodeId ff = g.add(
        g.matmul(g.gelu(g.add(g.matmul(h, g.param(*bp.ffn_w1)),
                              g.param(*bp.ffn_b1))),
                 g.param(*bp.ffn_w2)),
        g.param(*bp.ffn_b2));
    x = g.add(x, ff);
  }
  return x;
}

Graph::NodeId Model::logits_node(Graph& g, Graph::NodeId decoder_out) const {
  Parameter* proj = cfg_.tie_output_to_embedding ? tok_emb_ : out_proj_;
  return g.matmul(decoder_out, g.transpose(g.param(*proj)));
}

Graph::NodeId Model::loss_node(Graph& g, std::span<const int> source,
                               std::span<const int> target, int bos_id) const {
  if (target.empty()) {
    fail(ErrorCode::InvalidArgument, "loss: empty target sequence");
  }
  std::vector<int> decoder_in;
  decoder_in.reserve(target.size());
  decoder_in.push_back(bos_id);
  decoder_in.insert(decoder_in.end(), target.begin(), target.end() - 1);

  Graph::NodeId enc = encoder_forward(g, source);
  Graph::NodeId dec = decoder_forward(g, enc, decoder_in);
  Graph::NodeId logits = logits_node(g, dec);
  return g.cross_entropy(logits,
                         std::vector<int>(target.begin(), target.end()));
}

std::pair<double, std::vector<double>> Model::forward_loss(
    std::span<const int> source, std::span<const int> target,
    int bos_id) const {
  Graph g;
  Graph::NodeId loss = loss_node(g, source, target, bos_id);
  return {g.value(loss)(0, 0), g.per_token_nll(loss)};
}

Tensor Model::encode(std::span<const int> source) const {
  Graph g;
  return g.value(encoder_forward(g, source));
}

std::vector<double> Model::step_logprobs(
    const Tensor& encoder_out, std::span<const int> decoder_tokens) const {
  Graph g;
  Graph::NodeId enc = g.input(encoder_out);
  Graph::NodeId dec = decoder_forward(g, enc, decoder_tokens);
  Graph::NodeId logits = logits_node(g, dec);
  const Tensor& l = g.value(logits);
  const std::size_t last = l.rows() - 1;
  double mx = l(last, 0);
  for (std::size_t c = 1; c < l.cols(); ++c) mx = std::max(mx, l(last, c));
  double denom = 0.0;
  for (std::size_t c = 0; c < l.cols(); ++c) {
    denom += std::exp(l(last, c) - mx);
  }
  const double lse = mx + std::log(denom);
  std::vector<double> out(l.cols());
  for (std::size_t c = 0; c < l.cols(); ++c) out[c] = l(last, c) - lse;
  return out;
}

std::vector<BeamHypothesis> Model::beam_decode(std::span<const int> source,
                                               std::size_t beam_width,
                                               std::size_t max_len, int bos_id,
                                               int eos_id) const {
  if (max_len + 1 > cfg_.max_positions) {
    fail(ErrorCode::InvalidArgument,
         "beam_decode: max_len exceeds decoder positions");
  }
  const Tensor enc = encode(source);
  StepScorer scorer = [&](const std::vector<int>& prefix) {
    std::vector<int> toks;
    toks.reserve(prefix.size() + 1);
    toks.push_back(bos_id);
    toks.insert(toks.end(), prefix.begin(), prefix.end());
    return step_logprobs(enc, toks);
  };
  return beam_search(scorer, eos_id, beam_width, max_len);
}

}  // namespace tunelab
