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

/*
 * C interface of the tunelab shared library. Every function returns a
 * tunelab_status; on failure tunelab_last_error() carries a thread-local
 * message describing what went wrong. Strings returned through `char**`
 * out-parameters are heap-allocated and must be released with
 * tunelab_string_free().
 */

#ifndef TUNELAB_TUNELAB_H_
#define TUNELAB_TUNELAB_H_

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tunelab_status {
  TUNELAB_OK = 0,
  TUNELAB_INVALID_ARGUMENT = 1,
  TUNELAB_SHAPE_ERROR = 2,
  TUNELAB_NUMERIC_ERROR = 3,
  TUNELAB_IO_ERROR = 4,
  TUNELAB_INTERNAL_ERROR = 5,
} tunelab_status;

/* Library version string, e.g. "0.1.0". */
const char* tunelab_version(void);

/* Message of the most recent failure on the calling thread ("" if none). */
const char* tunelab_last_error(void);

void tunelab_string_free(char* s);

/* ---- corpus analysis ---------------------------------------------------- */

/* Per-project token statistics as a CSV text: project id, file count,
 * token count, unique token count. `corpus_path` is a directory of project
 * subdirectories, a corpus JSONL file (project_id, text) or a dataset JSONL
 * file (project_id, focal_method, test_case). */
tunelab_status tunelab_corpus_stats(const char* corpus_path,
                                    char** out_report);

/* Shared-token ratio matrix written as CSV. */
tunelab_status tunelab_corpus_matrix(const char* corpus_path,
                                     const char* out_csv_path);

/* ---- synthetic data ------------------------------------------------------ */

/* Generates the synthetic multi-project dataset as a dataset JSONL file
 * (keys project_id, focal_method, test_case). */
tunelab_status tunelab_synth_generate(unsigned long long seed,
                                      size_t projects,
                                      size_t examples_per_project,
                                      size_t shared_words,
                                      const char* out_jsonl_path);

/* ---- analytic models ------------------------------------------------------ */

/* Parameter census for a model configuration file under a strategy
 * ("custom", "l-eo", "l-ldb" or "prefix"). Either out-pointer may be NULL. */
tunelab_status tunelab_params_count(const char* model_config_path,
                                    const char* strategy,
                                    size_t prefix_length,
                                    unsigned long long* out_total,
                                    unsigned long long* out_trainable);

/* Per-token training cost under a strategy, plus the total over `tokens`
 * tokens. Any out-pointer may be NULL. */
tunelab_status tunelab_flops_estimate(const char* model_config_path,
                                      const char* strategy,
                                      size_t prefix_length,
                                      unsigned long long tokens,
                                      unsigned long long* out_forward_per_token,
                                      unsigned long long* out_backward_per_token,
                                      unsigned long long* out_total);

/* ---- training and evaluation ---------------------------------------------- */

/* Trains a model on one project of a dataset under a strategy and writes a
 * model bundle (config.cfg, model.ckpt, vocab.tl) plus curve.csv, drift.csv
 * and summary.txt into out_dir. `config_path` may be NULL for defaults; the
 * file accepts the experiment configuration keys (model shape, max_steps,
 * eval_every, patience, learning rates, prefix_length, seed). */
tunelab_status tunelab_train(const char* dataset_path,
                             const char* project_id,
                             const char* strategy,
                             const char* config_path,
                             const char* out_dir,
                             double* out_best_val_loss,
                             unsigned long long* out_steps);

typedef struct tunelab_eval_metrics {
  double perplexity;
  double bleu;
  double exact_at_1;
  double exact_at_5;
  double abstract_at_1;
  double abstract_at_5;
  double style;
} tunelab_eval_metrics;

/* A trained model bundle opened for inference. */
typedef struct tunelab_model tunelab_model;

tunelab_status tunelab_model_open(const char* bundle_dir,
                                  tunelab_model** out_model);
void tunelab_model_close(tunelab_model* model);

/* Best hypothesis for a focal method text. */
tunelab_status tunelab_model_generate(const tunelab_model* model,
                                      const char* focal_text,
                                      size_t beam_width, size_t max_len,
                                      char** out_text);

/* Evaluates the model on one project of a dataset: beam-decodes every
 * example, writes ranked predictions as JSONL (focal_id, rank, text, score)
 * when out_predictions_path is non-NULL, and fills the metrics struct. */
tunelab_status tunelab_eval(const tunelab_model* model,
                            const char* dataset_path,
                            const char* project_id,
                            size_t beam_width, size_t max_len,
                            const char* out_predictions_path,
                            tunelab_eval_metrics* out_metrics);

/* ---- statistics ------------------------------------------------------------ */

/* Kruskal-Wallis H test over a CSV file with a `group,value` header. */
tunelab_status tunelab_stats_kw(const char* csv_path, double* out_h,
                                double* out_p);

/* ---- experiments ------------------------------------------------------------ */

/* Runs the full cross-validated personalization grid described by a
 * configuration file; `out_dir` overrides the file's out_dir when non-NULL. */
tunelab_status tunelab_experiment_run(const char* config_path,
                                      const char* out_dir);

/* Mean absolute parameter change per block between two checkpoints. */
tunelab_status tunelab_drift_report(const char* before_checkpoint,
                                    const char* after_checkpoint,
                                    const char* out_csv_path);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* TUNELAB_TUNELAB_H_ */
