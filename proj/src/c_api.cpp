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

#include "tunelab/tunelab.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tunelab/bundle.hpp"
#include "tunelab/corpus.hpp"
#include "tunelab/error.hpp"
#include "tunelab/experiment.hpp"
#include "tunelab/flops.hpp"
#include "tunelab/stats.hpp"

namespace {

namespace fs = std::filesystem;
using namespace tunelab;

thread_local std::string g_last_error;

tunelab_status map_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
      return TUNELAB_INVALID_ARGUMENT;
    case ErrorCode::Shape:
      return TUNELAB_SHAPE_ERROR;
    case ErrorCode::Numeric:
      return TUNELAB_NUMERIC_ERROR;
    case ErrorCode::Io:
      return TUNELAB_IO_ERROR;
    case ErrorCode::Internal:
      return TUNELAB_INTERNAL_ERROR;
  }
  return TUNELAB_INTERNAL_ERROR;
}

template <typename Fn>
tunelab_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return TUNELAB_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return TUNELAB_INTERNAL_ERROR;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TUNELAB_INTERNAL_ERROR;
  }
}

const char* require_arg(const char* value, const char* what) {
  if (value == nullptr) {
    fail(ErrorCode::InvalidArgument,
         std::string(what) + " must not be null");
  }
  return value;
}

template <typename T>
T* require_ptr(T* pointer, const char* what) {
  if (pointer == nullptr) {
    fail(ErrorCode::InvalidArgument,
         std::string(what) + " must not be null");
  }
  return pointer;
}

char* dup_string(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

ModelConfig config_from_file(const char* path) {
  return ModelConfig::from_kv(
      KeyValueFile::parse_file(require_arg(path, "model config path")));
}

// Corpus inputs may be a project directory tree, a corpus JSONL
// (project_id, text) or a dataset JSONL (project_id, focal_method,
// test_case); dataset records are folded into per-project corpora so the
// analysis commands work directly on generated datasets.
std::vector<ProjectCorpus> load_corpora_any(const std::string& path) {
  std::error_code ec;
  if (!std::filesystem::is_directory(path, ec)) {
    std::ifstream in(path);
    std::string line;
    while (in && std::getline(in, line)) {
      if (line.empty()) continue;
      const auto record = nlohmann::json::parse(line, nullptr, false);
      if (record.is_object() && record.contains("focal_method")) {
        std::vector<ProjectCorpus> corpora;
        for (const auto& group : group_by_project(load_dataset_jsonl(path))) {
          corpora.push_back(corpus_from_examples(group));
        }
        return corpora;
      }
      break;
    }
  }
  return load_corpora(path);
}

// Examples of one project, with their "<project>:<index>" ids.
std::pair<std::vector<FocalExample>, std::vector<std::string>>
project_slice(const char* dataset_path, const char* project_id) {
  const auto examples =
      load_dataset_jsonl(require_arg(dataset_path, "dataset path"));
  const std::string wanted = require_arg(project_id, "project id");
  std::vector<FocalExample> mine;
  std::vector<std::string> ids;
  for (const FocalExample& example : examples) {
    if (example.project_id != wanted) continue;
    ids.push_back(wanted + ":" + std::to_string(mine.size()));
    mine.push_back(example);
  }
  if (mine.empty()) {
    fail(ErrorCode::InvalidArgument,
         "dataset has no examples for project '" + wanted + "'");
  }
  return {std::move(mine), std::move(ids)};
}

}  // namespace

struct tunelab_model {
  ModelBundle bundle;
};

extern "C" {

const char* tunelab_version(void) { return "0.1.0"; }

const char* tunelab_last_error(void) { return g_last_error.c_str(); }

void tunelab_string_free(char* s) { std::free(s); }

tunelab_status tunelab_corpus_stats(const char* corpus_path,
                                    char** out_report) {
  return guarded([&] {
    require_arg(corpus_path, "corpus path");
    require_ptr(out_report, "output pointer");
    const auto corpora = load_corpora_any(corpus_path);
    std::ostringstream csv;
    csv << "# tokenizer_version=" << kAnalysisTokenizerVersion << "\n";
    csv << "project,files,tokens,unique_tokens\n";
    for (const ProjectCorpus& project : corpora) {
      const auto counts = analysis_token_counts(project);
      std::size_t total = 0;
      for (const auto& [token, count] : counts) total += count;
      csv << project.id << ',' << project.files.size() << ',' << total << ','
          << counts.size() << '\n';
    }
    *out_report = dup_string(csv.str());
  });
}

tunelab_status tunelab_corpus_matrix(const char* corpus_path,
                                     const char* out_csv_path) {
  return guarded([&] {
    const auto corpora =
        load_corpora_any(require_arg(corpus_path, "corpus path"));
    write_matrix_csv(shared_token_matrix(corpora),
                     require_arg(out_csv_path, "output csv path"));
  });
}

tunelab_status tunelab_synth_generate(unsigned long long seed,
                                      size_t projects,
                                      size_t examples_per_project,
                                      size_t shared_words,
                                      const char* out_jsonl_path) {
  return guarded([&] {
    SyntheticOptions options;
    options.seed = seed;
    options.projects = projects;
    options.examples_per_project = examples_per_project;
    options.shared_words = shared_words;
    const auto generated = generate_synthetic_projects(options);
    std::vector<FocalExample> flat;
    for (const auto& group : generated) {
      flat.insert(flat.end(), group.begin(), group.end());
    }
    write_dataset_jsonl(flat, require_arg(out_jsonl_path, "output path"));
  });
}

tunelab_status tunelab_params_count(const char* model_config_path,
                                    const char* strategy,
                                    size_t prefix_length,
                                    unsigned long long* out_total,
                                    unsigned long long* out_trainable) {
  return guarded([&] {
    const ModelConfig cfg = config_from_file(model_config_path);
    const StrategyKind kind =
        parse_strategy(require_arg(strategy, "strategy"));
    const ParamCounts counts = count_parameters(cfg, kind, prefix_length);
    if (out_total != nullptr) *out_total = counts.total;
    if (out_trainable != nullptr) *out_trainable = counts.trainable;
  });
}

tunelab_status tunelab_flops_estimate(
    const char* model_config_path, const char* strategy, size_t prefix_length,
    unsigned long long tokens, unsigned long long* out_forward_per_token,
    unsigned long long* out_backward_per_token, unsigned long long* out_total) {
  return guarded([&] {
    const ModelConfig cfg = config_from_file(model_config_path);
    const StrategyKind kind =
        parse_strategy(require_arg(strategy, "strategy"));
    const ParameterRegistry registry = config_registry(cfg, prefix_length);
    const FreezePlan plan = make_freeze_plan(kind, registry, prefix_length);
    const TrainStepFlops flops = flops_train_step(cfg, plan, tokens);
    if (out_forward_per_token != nullptr) {
      *out_forward_per_token = flops.forward_per_token;
    }
    if (out_backward_per_token != nullptr) {
      *out_backward_per_token = flops.backward_per_token;
    }
    if (out_total != nullptr) *out_total = flops.total;
  });
}

tunelab_status tunelab_train(const char* dataset_path, const char* project_id,
                             const char* strategy, const char* config_path,
                             const char* out_dir, double* out_best_val_loss,
                             unsigned long long* out_steps) {
  return guarded([&] {
    const std::string out = require_arg(out_dir, "output directory");
    const StrategyKind kind =
        parse_strategy(require_arg(strategy, "strategy"));
    ExperimentConfig config;
    if (config_path != nullptr) {
      config = ExperimentConfig::from_kv(KeyValueFile::parse_file(config_path));
    }

    const auto all = load_dataset_jsonl(require_arg(dataset_path, "dataset"));
    const std::string wanted = require_arg(project_id, "project id");
    std::vector<FocalExample> mine;
    for (const FocalExample& example : all) {
      if (example.project_id == wanted) mine.push_back(example);
    }
    if (mine.size() < 2) {
      fail(ErrorCode::InvalidArgument,
           "training needs at least two examples for project '" + wanted +
               "'");
    }

    // The vocabulary is shared across projects, so train it on everything.
    std::vector<std::string> texts;
    for (const FocalExample& example : all) {
      texts.push_back(example.focal_method);
      texts.push_back(example.test_case);
    }
    SubwordVocabulary vocab =
        SubwordVocabulary::train(texts, config.model.vocab_size);

    ModelConfig mc = config.model;
    mc.vocab_size = vocab.size();
    mc.validate();
    Model model(mc, config.seed);

    std::optional<PrefixBank> bank;
    if (kind == StrategyKind::Prefix) {
      bank.emplace(init_prefix(corpus_from_examples(mine), model, vocab,
                               config.prefix_length));
      model.attach_prefix(&*bank);
    }
    const FreezePlan plan =
        make_freeze_plan(kind, model.registry(), config.prefix_length);
    model.apply_freeze_plan(plan);

    // Deterministic 90/10 train/validation split of the project examples.
    std::vector<std::size_t> order(mine.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(config.seed ^ 0x5eedULL);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t val_count = mine.size() / 10;
    if (val_count == 0) val_count = 1;
    std::vector<TokenPair> train_pairs;
    std::vector<TokenPair> val_pairs;
    for (std::size_t i = 0; i < order.size(); ++i) {
      TokenPair pair =
          encode_example(mine[order[i]], vocab, mc.max_positions);
      if (i < val_count) {
        val_pairs.push_back(std::move(pair));
      } else {
        train_pairs.push_back(std::move(pair));
      }
    }

    const std::vector<const Parameter*> before_view =
        static_cast<const Model&>(model).parameters();
    const std::vector<CheckpointEntry> before = snapshot(before_view);

    TrainOptions options = config.train;
    auto lr = config.strategy_lr.find(kind);
    if (lr != config.strategy_lr.end()) options.lr = lr->second;
    options.seed = config.seed + 1;
    const TrainResult trained =
        train_to_best(model, plan, train_pairs, val_pairs, options);

    fs::create_directories(out);
    save_model_bundle(model, vocab, out);

    const DriftReport drift = drift_report(
        before, snapshot(static_cast<const Model&>(model).parameters()));
    write_drift_csv(drift, out + "/drift.csv");

    {
      std::ofstream curve(out + "/curve.csv");
      if (!curve) fail(ErrorCode::Io, "cannot write " + out + "/curve.csv");
      curve << "cumulative_flops,pf_seconds,val_loss\n";
      for (const FlopLedger::Point& point : trained.curve) {
        curve << point.cumulative_flops << ',' << point.pf_seconds << ','
              << point.val_loss << '\n';
      }
    }
    {
      std::ofstream summary(out + "/summary.txt");
      if (!summary) fail(ErrorCode::Io, "cannot write " + out + "/summary.txt");
      summary << "project = " << project_id << "\n";
      summary << "strategy = " << strategy_name(kind) << "\n";
      summary << "best_val_loss = " << trained.best_val_loss << "\n";
      summary << "steps = " << trained.steps_taken << "\n";
      summary << "train_flops = " << trained.total_flops << "\n";
      summary << "pf_seconds = "
              << static_cast<double>(trained.total_flops) / 1e15 << "\n";
      summary << "failed = " << (trained.failed ? "true" : "false") << "\n";
    }

    if (out_best_val_loss != nullptr) *out_best_val_loss = trained.best_val_loss;
    if (out_steps != nullptr) *out_steps = trained.steps_taken;
  });
}

tunelab_status tunelab_model_open(const char* bundle_dir,
                                  tunelab_model** out_model) {
  return guarded([&] {
    require_ptr(out_model, "output pointer");
    ModelBundle bundle =
        load_model_bundle(require_arg(bundle_dir, "bundle directory"));
    *out_model = new tunelab_model{std::move(bundle)};
  });
}

void tunelab_model_close(tunelab_model* model) { delete model; }

tunelab_status tunelab_model_generate(const tunelab_model* model,
                                      const char* focal_text,
                                      size_t beam_width, size_t max_len,
                                      char** out_text) {
  return guarded([&] {
    if (model == nullptr) {
      fail(ErrorCode::InvalidArgument, "model handle must not be null");
    }
    require_arg(focal_text, "focal text");
    require_ptr(out_text, "output pointer");
    const Model& net = *model->bundle.model;
    const std::size_t max_positions = net.config().max_positions;
    std::vector<int> source = model->bundle.vocab.encode(focal_text);
    if (source.empty()) {
      fail(ErrorCode::InvalidArgument, "focal text encodes to nothing");
    }
    if (source.size() > max_positions) source.resize(max_positions);
    const std::size_t capped =
        std::min(max_len, max_positions - 1);
    const auto hyps = net.beam_decode(source, beam_width, capped);
    *out_text = dup_string(model->bundle.vocab.decode(hyps.front().tokens));
  });
}

tunelab_status tunelab_eval(const tunelab_model* model,
                            const char* dataset_path, const char* project_id,
                            size_t beam_width, size_t max_len,
                            const char* out_predictions_path,
                            tunelab_eval_metrics* out_metrics) {
  return guarded([&] {
    if (model == nullptr) {
      fail(ErrorCode::InvalidArgument, "model handle must not be null");
    }
    auto [examples, ids] = project_slice(dataset_path, project_id);
    EvalOptions options;
    options.beam_width = beam_width;
    options.max_len = max_len;
    const EvalResult result = evaluate_model(
        *model->bundle.model, model->bundle.vocab, examples, ids, options);
    if (out_predictions_path != nullptr) {
      write_predictions_jsonl(result.predictions, out_predictions_path);
    }
    if (out_metrics != nullptr) {
      out_metrics->perplexity = result.perplexity;
      out_metrics->bleu = result.bleu;
      out_metrics->exact_at_1 = result.exact_at_1;
      out_metrics->exact_at_5 = result.exact_at_5;
      out_metrics->abstract_at_1 = result.abstract_at_1;
      out_metrics->abstract_at_5 = result.abstract_at_5;
      out_metrics->style = result.style;
    }
  });
}

tunelab_status tunelab_stats_kw(const char* csv_path, double* out_h,
                                double* out_p) {
  return guarded([&] {
    std::ifstream in(require_arg(csv_path, "csv path"));
    if (!in) fail(ErrorCode::Io, std::string("cannot open ") + csv_path);
    std::string line;
    if (!std::getline(in, line)) {
      fail(ErrorCode::Io, std::string(csv_path) + ": empty file");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "group,value") {
      fail(ErrorCode::Io,
           std::string(csv_path) + ": expected a group,value header");
    }
    std::vector<std::string> names;
    std::vector<std::vector<double>> groups;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos) {
        fail(ErrorCode::Io, std::string(csv_path) + ":" +
                                std::to_string(lineno) + ": missing comma");
      }
      const std::string group = line.substr(0, comma);
      double value = 0.0;
      try {
        std::size_t used = 0;
        value = std::stod(line.substr(comma + 1), &used);
        if (used != line.size() - comma - 1) throw std::invalid_argument("");
      } catch (const std::exception&) {
        fail(ErrorCode::Io, std::string(csv_path) + ":" +
                                std::to_string(lineno) + ": bad value");
      }
      auto it = std::find(names.begin(), names.end(), group);
      if (it == names.end()) {
        names.push_back(group);
        groups.emplace_back();
        it = names.end() - 1;
      }
      groups[static_cast<std::size_t>(it - names.begin())].push_back(value);
    }
    const KruskalWallisResult result = kruskal_wallis(groups);
    if (out_h != nullptr) *out_h = result.h;
    if (out_p != nullptr) *out_p = result.p_value;
  });
}

tunelab_status tunelab_experiment_run(const char* config_path,
                                      const char* out_dir) {
  return guarded([&] {
    ExperimentConfig config = ExperimentConfig::from_kv(
        KeyValueFile::parse_file(require_arg(config_path, "config path")));
    if (out_dir != nullptr) config.out_dir = out_dir;
    run_experiment(config);
  });
}

tunelab_status tunelab_drift_report(const char* before_checkpoint,
                                    const char* after_checkpoint,
                                    const char* out_csv_path) {
  return guarded([&] {
    const auto before =
        load_checkpoint(require_arg(before_checkpoint, "before checkpoint"));
    const auto after =
        load_checkpoint(require_arg(after_checkpoint, "after checkpoint"));
    write_drift_csv(drift_report(before, after),
                    require_arg(out_csv_path, "output csv path"));
  });
}

}  // extern "C"
