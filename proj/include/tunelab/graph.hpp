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

#include <cstddef>
#include <vector>

#include "tunelab/parameter.hpp"
#include "tunelab/tensor.hpp"

namespace tunelab {

/// Reverse-mode automatic differentiation over a tape of primitive ops.
///
/// A Graph is built once per forward pass. Nodes are appended in evaluation
/// order; backward() walks the tape in reverse exactly once and accumulates
/// gradients into the graph nodes and, for parameter leaves, into the owning
/// Parameter. Frozen parameters are never given gradient storage, and
/// subgraphs that cannot reach a trainable parameter are skipped entirely.
class Graph {
 public:
  using NodeId = int;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // ----- leaves ------------------------------------------------------------

  /// Constant input; never receives a gradient.
  NodeId input(Tensor value);

  /// Parameter leaf. The parameter must outlive the graph. Gradients flow
  /// into p.grad unless p.frozen.
  NodeId param(Parameter& p);

  // ----- primitives ----------------------------------------------------------

  NodeId matmul(NodeId a, NodeId b);
  NodeId transpose(NodeId a);

  /// Elementwise add. b may be 1xN to broadcast one row over all rows of a.
  NodeId add(NodeId a, NodeId b);

  /// Elementwise multiply, same broadcast rule as add.
  NodeId mul(NodeId a, NodeId b);

  NodeId scale(NodeId a, double s);

  /// Row-wise softmax with max subtraction for stability.
  NodeId softmax(NodeId a);

  /// Row-wise layer normalization (mean 0, variance 1, epsilon 1e-5).
  /// Affine gain/bias are applied by the caller with mul/add.
  NodeId layernorm(NodeId a);

  NodeId gelu(NodeId a);

  /// Gathers rows of a table (one per id) into an |ids| x cols matrix.
  NodeId embedding(NodeId table, std::vector<int> ids);

  /// axis 0 stacks rows, axis 1 concatenates columns.
  NodeId concat(NodeId a, NodeId b, int axis);

  /// Half-open row/column ranges.
  NodeId slice(NodeId a, std::size_t row_begin, std::size_t row_end,
               std::size_t col_begin, std::size_t col_end);

  /// Sum of all entries; result is a 1x1 scalar.
  NodeId sum(NodeId a);

  /// Mean token-level negative log likelihood of integer targets given a
  /// logits matrix (one row per position). Uses log-sum-exp internally.
  NodeId cross_entropy(NodeId logits, std::vector<int> targets);

  // ----- access --------------------------------------------------------------

  const Tensor& value(NodeId id) const;

  /// Gradient of the loss w.r.t. this node; valid after backward(). Empty
  /// tensor when no gradient reached the node.
  const Tensor& grad(NodeId id) const;

  /// Per-position negative log likelihoods of a cross_entropy node.
  const std::vector<double>& per_token_nll(NodeId ce_node) const;

  /// Reverse pass seeded with d(loss)/d(loss) = seed. The target must be a
  /// scalar node. Calling backward twice on one graph is an error.
  void backward(NodeId loss, double seed = 1.0);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  enum class Op {
    Input,
    Param,
    Matmul,
    Transpose,
    Add,
    Mul,
    Scale,
    Softmax,
    LayerNorm,
    Gelu,
    Embedding,
    Concat,
    Slice,
    Sum,
    CrossEntropy,
  };

  struct Node {
    Op op;
    NodeId a = -1;
    NodeId b = -1;
    Tensor value;
    Tensor grad;             // allocated lazily during backward
    Tensor saved;            // op-specific cache (softmax output, CE probs, ...)
    Parameter* parameter = nullptr;
    bool requires_grad = false;
    double scalar = 0.0;     // Scale factor
    int axis = 0;            // Concat axis
    std::size_t r0 = 0, r1 = 0, c0 = 0, c1 = 0;  // Slice bounds
    std::vector<int> ids;    // Embedding ids / CrossEntropy targets
    std::vector<double> nll; // CrossEntropy per-position losses
  };

  NodeId emit(Node n, const char* op_name);
  Node& at(NodeId id);
  const Node& at(NodeId id) const;
  void add_grad(NodeId id, const Tensor& g);
  void backward_node(Node& n);

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

}  // namespace tunelab
