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

// Command-line front end of the tunelab shared library. The binary speaks
// only through the C interface in tunelab/tunelab.h, so it doubles as a
// smoke test of the public ABI: anything the CLI can do, a foreign-language
// binding can do too.

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "tunelab/tunelab.h"

namespace {

// Prints the library's thread-local error message and converts the status
// into a process exit code (the numeric status value, which is never 0 here).
int fail(tunelab_status status) {
  std::fprintf(stderr, "tunelab: error: %s\n", tunelab_last_error());
  return static_cast<int>(status);
}

int run_corpus_stats(const std::string& path) {
  char* report = nullptr;
  tunelab_status status = tunelab_corpus_stats(path.c_str(), &report);
  if (status != TUNELAB_OK) return fail(status);
  std::fputs(report, stdout);
  tunelab_string_free(report);
  return 0;
}

int run_corpus_matrix(const std::string& path, const std::string& out) {
  tunelab_status status = tunelab_corpus_matrix(path.c_str(), out.c_str());
  if (status != TUNELAB_OK) return fail(status);
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

int run_synth_gen(unsigned long long seed, std::size_t projects,
                  std::size_t examples, std::size_t shared,
                  const std::string& out) {
  tunelab_status status =
      tunelab_synth_generate(seed, projects, examples, shared, out.c_str());
  if (status != TUNELAB_OK) return fail(status);
  std::printf("wrote %s (%zu projects x %zu examples)\n", out.c_str(),
              projects, examples);
  return 0;
}

int run_params_count(const std::string& config, const std::string& strategy,
                     std::size_t prefix_length) {
  unsigned long long total = 0;
  unsigned long long trainable = 0;
  tunelab_status status = tunelab_params_count(
      config.c_str(), strategy.c_str(), prefix_length, &total, &trainable);
  if (status != TUNELAB_OK) return fail(status);
  std::printf("total = %llu\n", total);
  std::printf("trainable = %llu (%.3f%%)\n", trainable,
              total == 0 ? 0.0 : 100.0 * static_cast<double>(trainable) /
                                     static_cast<double>(total));
  return 0;
}

int run_flops_estimate(const std::string& config, const std::string& strategy,
                       std::size_t prefix_length, unsigned long long tokens) {
  unsigned long long forward = 0;
  unsigned long long backward = 0;
  unsigned long long total = 0;
  tunelab_status status =
      tunelab_flops_estimate(config.c_str(), strategy.c_str(), prefix_length,
                             tokens, &forward, &backward, &total);
  if (status != TUNELAB_OK) return fail(status);
  std::printf("forward_per_token = %llu\n", forward);
  std::printf("backward_per_token = %llu\n", backward);
  std::printf("train_per_token = %llu\n", forward + backward);
  std::printf("tokens = %llu\n", tokens);
  std::printf("total_flops = %llu\n", total);
  std::printf("pf_seconds = %.9f\n", static_cast<double>(total) / 1e15);
  return 0;
}

int run_train(const std::string& dataset, const std::string& project,
              const std::string& strategy, const std::string& config,
              const std::string& out_dir) {
  double best = 0.0;
  unsigned long long steps = 0;
  tunelab_status status =
      tunelab_train(dataset.c_str(), project.c_str(), strategy.c_str(),
                    config.empty() ? nullptr : config.c_str(), out_dir.c_str(),
                    &best, &steps);
  if (status != TUNELAB_OK) return fail(status);
  std::printf("best_val_loss = %.6f\n", best);
  std::printf("steps = %llu\n", steps);
  std::printf("bundle written to %s\n", out_dir.c_str());
  return 0;
}

int run_eval(const std::string& bundle, const std::string& dataset,
             const std::string& project, std::size_t beam_width,
             std::size_t max_len, const std::string& predictions) {
  tunelab_model* model = nullptr;
  tunelab_status status = tunelab_model_open(bundle.c_str(), &model);
  if (status != TUNELAB_OK) return fail(status);

  tunelab_eval_metrics metrics = {};
  status = tunelab_eval(model, dataset.c_str(), project.c_str(), beam_width,
                        max_len,
                        predictions.empty() ? nullptr : predictions.c_str(),
                        &metrics);
  tunelab_model_close(model);
  if (status != TUNELAB_OK) return fail(status);

  std::printf("perplexity = %.6f\n", metrics.perplexity);
  std::printf("bleu = %.6f\n", metrics.bleu);
  std::printf("exact_at_1 = %.6f\n", metrics.exact_at_1);
  std::printf("exact_at_%zu = %.6f\n", beam_width, metrics.exact_at_5);
  std::printf("abstract_at_1 = %.6f\n", metrics.abstract_at_1);
  std::printf("abstract_at_%zu = %.6f\n", beam_width, metrics.abstract_at_5);
  std::printf("style = %.6f\n", metrics.style);
  if (!predictions.empty()) std::printf("predictions written to %s\n",
                                        predictions.c_str());
  return 0;
}

int run_generate(const std::string& bundle, const std::string& focal,
                 std::size_t beam_width, std::size_t max_len) {
  tunelab_model* model = nullptr;
  tunelab_status status = tunelab_model_open(bundle.c_str(), &model);
  if (status != TUNELAB_OK) return fail(status);

  char* text = nullptr;
  status = tunelab_model_generate(model, focal.c_str(), beam_width, max_len,
                                  &text);
  tunelab_model_close(model);
  if (status != TUNELAB_OK) return fail(status);
  std::printf("%s\n", text);
  tunelab_string_free(text);
  return 0;
}

int run_stats_kw(const std::string& input) {
  double h = 0.0;
  double p = 0.0;
  tunelab_status status = tunelab_stats_kw(input.c_str(), &h, &p);
  if (status != TUNELAB_OK) return fail(status);
  std::printf("h = %.6f\n", h);
  std::printf("p = %.6f\n", p);
  return 0;
}

int run_experiment(const std::string& config, const std::string& out_dir) {
  tunelab_status status = tunelab_experiment_run(
      config.c_str(), out_dir.empty() ? nullptr : out_dir.c_str());
  if (status != TUNELAB_OK) return fail(status);
  std::printf("experiment complete%s%s\n", out_dir.empty() ? "" : ", wrote ",
              out_dir.c_str());
  return 0;
}

int run_drift_report(const std::string& before, const std::string& after,
                     const std::string& out) {
  tunelab_status status =
      tunelab_drift_report(before.c_str(), after.c_str(), out.c_str());
  if (status != TUNELAB_OK) return fail(status);
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tunelab: transformer personalization lab"};
  app.set_version_flag("--version", std::string(tunelab_version()));
  app.require_subcommand(1);

  // corpus stats|matrix ------------------------------------------------------
  CLI::App* corpus = app.add_subcommand("corpus", "corpus token analysis");
  corpus->require_subcommand(1);

  std::string corpus_path;
  CLI::App* corpus_stats =
      corpus->add_subcommand("stats", "per-project token statistics (CSV)");
  corpus_stats->add_option("path", corpus_path,
                           "project tree, corpus JSONL or dataset JSONL")
      ->required();

  std::string matrix_out = "matrix.csv";
  CLI::App* corpus_matrix =
      corpus->add_subcommand("matrix", "pairwise shared-token ratio matrix");
  corpus_matrix->add_option("path", corpus_path,
                            "project tree, corpus JSONL or dataset JSONL")
      ->required();
  corpus_matrix->add_option("-o,--out", matrix_out, "output CSV path");

  // synth gen ----------------------------------------------------------------
  CLI::App* synth = app.add_subcommand("synth", "synthetic datasets");
  synth->require_subcommand(1);

  unsigned long long synth_seed = 1;
  std::size_t synth_projects = 4;
  std::size_t synth_examples = 12;
  std::size_t synth_shared = 4;
  std::string synth_out = "dataset.jsonl";
  CLI::App* synth_gen =
      synth->add_subcommand("gen", "generate a multi-project dataset JSONL");
  synth_gen->add_option("--seed", synth_seed, "generator seed");
  synth_gen->add_option("--projects", synth_projects, "number of projects");
  synth_gen->add_option("--examples", synth_examples, "examples per project");
  synth_gen->add_option("--shared-words", synth_shared,
                        "shared vocabulary words (0-10)");
  synth_gen->add_option("-o,--out", synth_out, "output JSONL path");

  // params count -------------------------------------------------------------
  CLI::App* params = app.add_subcommand("params", "parameter census");
  params->require_subcommand(1);

  std::string model_config;
  std::string strategy = "custom";
  std::size_t prefix_length = 200;
  CLI::App* params_count =
      params->add_subcommand("count", "total and trainable parameter counts");
  params_count->add_option("-c,--config", model_config,
                           "model configuration file")
      ->required();
  params_count->add_option("-s,--strategy", strategy,
                           "custom | l-eo | l-ldb | prefix");
  params_count->add_option("--prefix-length", prefix_length,
                           "virtual tokens per block (prefix strategy)");

  // flops estimate -------------------------------------------------------------
  CLI::App* flops = app.add_subcommand("flops", "training cost model");
  flops->require_subcommand(1);

  unsigned long long flops_tokens = 1;
  CLI::App* flops_estimate = flops->add_subcommand(
      "estimate", "per-token and total training FLOPs under a strategy");
  flops_estimate->add_option("-c,--config", model_config,
                             "model configuration file")
      ->required();
  flops_estimate->add_option("-s,--strategy", strategy,
                             "custom | l-eo | l-ldb | prefix");
  flops_estimate->add_option("--prefix-length", prefix_length,
                             "virtual tokens per block (prefix strategy)");
  flops_estimate->add_option("--tokens", flops_tokens,
                             "number of training tokens");

  // train ----------------------------------------------------------------------
  std::string dataset_path;
  std::string project_id;
  std::string train_config;
  std::string train_out = "model";
  CLI::App* train = app.add_subcommand(
      "train", "personalize a model on one project of a dataset");
  train->add_option("-d,--dataset", dataset_path, "dataset JSONL")->required();
  train->add_option("-p,--project", project_id, "project id")->required();
  train->add_option("-s,--strategy", strategy,
                    "custom | l-eo | l-ldb | prefix");
  train->add_option("-c,--config", train_config,
                    "experiment configuration file (defaults when omitted)");
  train->add_option("-o,--out", train_out, "output bundle directory");

  // eval -------------------------------------------------------------------------
  std::string bundle_dir;
  std::size_t beam_width = 5;
  std::size_t max_len = 48;
  std::string predictions_out;
  CLI::App* eval = app.add_subcommand(
      "eval", "evaluate a trained bundle on one project of a dataset");
  eval->add_option("-m,--model", bundle_dir, "model bundle directory")
      ->required();
  eval->add_option("-d,--dataset", dataset_path, "dataset JSONL")->required();
  eval->add_option("-p,--project", project_id, "project id")->required();
  eval->add_option("--beam-width", beam_width, "beam width");
  eval->add_option("--max-len", max_len, "maximum generated tokens");
  eval->add_option("--predictions", predictions_out,
                   "ranked predictions JSONL (optional)");

  // generate -----------------------------------------------------------------------
  std::string focal_text;
  CLI::App* generate = app.add_subcommand(
      "generate", "beam-decode a test case for one focal method");
  generate->add_option("-m,--model", bundle_dir, "model bundle directory")
      ->required();
  generate->add_option("-f,--focal", focal_text, "focal method text")
      ->required();
  generate->add_option("--beam-width", beam_width, "beam width");
  generate->add_option("--max-len", max_len, "maximum generated tokens");

  // stats kw --------------------------------------------------------------------------
  CLI::App* stats = app.add_subcommand("stats", "statistical tests");
  stats->require_subcommand(1);

  std::string kw_input;
  CLI::App* stats_kw = stats->add_subcommand(
      "kw", "Kruskal-Wallis H test over a group,value CSV");
  stats_kw->add_option("-i,--input", kw_input, "CSV file with group,value rows")
      ->required();

  // experiment run -----------------------------------------------------------------------
  CLI::App* experiment =
      app.add_subcommand("experiment", "cross-validated strategy grids");
  experiment->require_subcommand(1);

  std::string experiment_config;
  std::string experiment_out;
  CLI::App* experiment_run = experiment->add_subcommand(
      "run", "run the full project x strategy x fold grid");
  experiment_run->add_option("-c,--config", experiment_config,
                             "experiment configuration file")
      ->required();
  experiment_run->add_option("-o,--out", experiment_out,
                             "output directory (overrides the file)");

  // drift report ------------------------------------------------------------------------------
  CLI::App* drift = app.add_subcommand("drift", "parameter drift analysis");
  drift->require_subcommand(1);

  std::string before_ckpt;
  std::string after_ckpt;
  std::string drift_out = "drift.csv";
  CLI::App* drift_report = drift->add_subcommand(
      "report", "mean absolute change per block between two checkpoints");
  drift_report->add_option("--before", before_ckpt, "checkpoint before training")
      ->required();
  drift_report->add_option("--after", after_ckpt, "checkpoint after training")
      ->required();
  drift_report->add_option("-o,--out", drift_out, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  if (*corpus_stats) return run_corpus_stats(corpus_path);
  if (*corpus_matrix) return run_corpus_matrix(corpus_path, matrix_out);
  if (*synth_gen)
    return run_synth_gen(synth_seed, synth_projects, synth_examples,
                         synth_shared, synth_out);
  if (*params_count)
    return run_params_count(model_config, strategy, prefix_length);
  if (*flops_estimate)
    return run_flops_estimate(model_config, strategy, prefix_length,
                              flops_tokens);
  if (*train)
    return run_train(dataset_path, project_id, strategy, train_config,
                     train_out);
  if (*eval)
    return run_eval(bundle_dir, dataset_path, project_id, beam_width, max_len,
                    predictions_out);
  if (*generate)
    return run_generate(bundle_dir, focal_text, beam_width, max_len);
  if (*stats_kw) return run_stats_kw(kw_input);
  if (*experiment_run) return run_experiment(experiment_config, experiment_out);
  if (*drift_report)
    return run_drift_report(before_ckpt, after_ckpt, drift_out);

  std::fprintf(stderr, "tunelab: error: no subcommand selected\n");
  return 1;
}
