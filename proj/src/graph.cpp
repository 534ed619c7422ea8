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

#include "tunelab/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tunelab/error.hpp"

namespace tunelab {

namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

bool row_broadcastable(const Tensor& a, const Tensor& b) {
  return b.rows() == 1 && b.cols() == a.cols();
}

}  // namespace

Graph::Node& Graph::at(NodeId id) {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
    fail(ErrorCode::InvalidArgument, "graph node id out of range");
  }
  return nodes_[static_cast<std::size_t>(id)];
}

const Graph::Node& Graph::at(NodeId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
    fail(ErrorCode::InvalidArgument, "graph node id out of range");
  }
  return nodes_[static_cast<std::size_t>(id)];
}

Graph::NodeId Graph::emit(Node n, const char* op_name) {
  if (n.value.empty()) {
    fail(ErrorCode::Internal, std::string(op_name) + ": empty result");
  }
  if (!n.value.all_finite()) {
    fail(ErrorCode::Numeric,
         std::string(op_name) + ": non-finite value produced");
  }
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

Graph::NodeId Graph::input(Tensor value) {
  Node n;
  n.op = Op::Input;
  n.value = std::move(value);
  n.requires_grad = false;
  return emit(std::move(n), "input");
}

Graph::NodeId Graph::param(Parameter& p) {
  if (p.value.empty()) {
    fail(ErrorCode::InvalidArgument, "parameter '" + p.id + "' has no value");
  }
  Node n;
  n.op = Op::Param;
  n.value = p.value;
  n.parameter = &p;
  n.requires_grad = !p.frozen;
  return emit(std::move(n), "param");
}

Graph::NodeId Graph::matmul(NodeId a, NodeId b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  Node n;
  n.op = Op::Matmul;
  n.a = a;
  n.b = b;
  n.value = tunelab::matmul(na.value, nb.value);
  n.requires_grad = na.requires_grad || nb.requires_grad;
  return emit(std::move(n), "matmul");
}

Graph::NodeId Graph::transpose(NodeId a) {
  const Node& na = at(a);
  Node n;
  n.op = Op::Transpose;
  n.a = a;
  n.value = transposed(na.value);
  n.requires_grad = na.requires_grad;
  return emit(std::move(n), "transpose");
}

Graph::NodeId Graph::add(NodeId a, NodeId b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  const Tensor& x = na.value;
  const Tensor& y = nb.value;
  const bool broadcast = !x.same_shape(y);
  if (broadcast && !row_broadcastable(x, y)) {
    fail(ErrorCode::Shape, "add: shapes are not compatible");
  }
  Node n;
  n.op = Op::Add;
  n.a = a;
  n.b = b;
  n.value = x;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      n.value(r, c) += broadcast ? y(0, c) : y(r, c);
    }
  }
  n.requires_grad = na.requires_grad || nb.requires_grad;
  return emit(std::move(n), "add");
}

Graph::NodeId Graph::mul(NodeId a, NodeId b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  const Tensor& x = na.value;
  const Tensor& y = nb.value;
  const bool broadcast = !x.same_shape(y);
  if (broadcast && !row_broadcastable(x, y)) {
    fail(ErrorCode::Shape, "mul: shapes are not compatible");
  }
  Node n;
  n.op = Op::Mul;
  n.a = a;
  n.b = b;
  n.value = x;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      n.value(r, c) *= broadcast ? y(0, c) : y(r, c);
    }
  }
  n.requires_grad = na.requires_grad || nb.requires_grad;
  return emit(std::move(n), "mul");
}

Graph::NodeId Graph::scale(NodeId a, double s) {
  const Node& na = at(a);
  Node n;
  n.op = Op::Scale;
  n.a = a;
  n.scalar = s;
  n.value = na.value;
  for (std::size_t r = 0; r < n.value.rows(); ++r) {
    for (std::size_t c = 0; c < n.value.cols(); ++c) n.value(r, c) *= s;
  }
  n.requires_grad = na.requires_grad;
  return emit(std::move(n), "scale");
}

Graph::NodeId Graph::softmax(NodeId a) {
  const Node& na = at(a);
  const Tensor& x = na.value;
  Node n;
  n.op = Op::Softmax;
  n.a = a;
  n.value = Tensor(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double mx = x(r, 0);
    for (std::size_t c = 1; c < x.cols(); ++c) mx = std::max(mx, x(r, c));
    double denom = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      double e = std::exp(x(r, c) - mx);
      n.value(r, c) = e;
      denom += e;
    }
    for (std::size_t c = 0; c < x.cols(); ++c) n.value(r, c) /= denom;
  }
  n.requires_grad = na.requires_grad;
  return emit(std::move(n), "softmax");
}

Graph::NodeId Graph::layernorm(NodeId a) {
  const Node& na = at(a);
  const Tensor& x = na.value;
  Node n;
  n.op = Op::LayerNorm;
  n.a = a;
  n.value = Tensor(x.rows(), x.cols());
  n.saved = Tensor(x.rows(), 1);  // inverse standard deviation per row
  const double cols = static_cast<double>(x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) mean += x(r, c);
    mean /= cols;
    double var = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      double d = x(r, c) - mean;
      var += d * d;
    }
    var /= cols;
    double inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
    n.saved(r, 0) = inv_std;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      n.value(r, c) = (x(r, c) - mean) * inv_std;
    }
  }
  n.requires_grad = na.requires_grad;
  return emit(std::move(n), "layernorm");
}

Graph::NodeId Graph::gelu(NodeId a) {
  const Node& na = at(a);
  const Tensor& x = na.value;
  Node n;
  n.op = Op::Gelu;
  n.a = a;
  n.value = Tensor(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      double v = x(r, c);
      n.value(r, c) = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
    }
  }
  n.requires_grad = na.requires_grad;
  return emit(std::move(n), "gelu");
}

Graph::NodeId Graph::embedding(NodeId table, std::vector<int> ids) {
  const Node& nt = at(table);
  const Tensor& t = nt.value;
  if (ids.empty()) {
    fail(ErrorCode::InvalidArgument, "embedding: empty id list");
  }
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= t.rows()) {
      fail(ErrorCode::InvalidArgument,
           "embedding: id " + std::to_string(id) + " outside table of " +
               std::to_string(t.rows()) + " rows");
    }
  }
  Node n;
  n.op = Op::Embedding;
  n.a = table;
  n.ids = std::move(ids);
  n.value = Tensor(n.ids.size(), t.cols());
  for (std::size_t r = 0; r < n.ids.size(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) {
      n.value(r, c) = t(static_cast<std::size_t>(n.ids[r]), c);
    }
  }
  n.requires_grad = nt.requires_grad;
  return emit(std::move(n), "embedding");
}

Graph::NodeId Graph::concat(NodeId a, NodeId b, int axis) {
  const Node& na = at(a);
  const Node& nb = at(b);
  const Tensor& x = na.value;
  const Tensor& y = nb.value;
  Node n;
  n.op = Op::Concat;
  n.a = a;
  n.b = b;
  n.axis = axis;
  if (axis == 0) {
    if (x.cols() != y.cols()) {
      fail(ErrorCode::Shape, "concat(rows): column counts differ");
    }
    n.value = Tensor(x.rows() + y.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t c = 0; c < x.cols(); ++c) n.value(r, c) = x(r, c);
    }
    for (std::size_t r = 0; r < y.rows(); ++r) {
      for (std::size_t c = 0; c < y.cols(); ++c) {
        n.value(x.rows() + r, c) = y(r, c);
      }
    }
  } else if (axis == 1) {
    if (x.rows() != y.rows()) {
      fail(ErrorCode::Shape, "concat(cols): row counts differ");
    }
    n.value = Tensor(x.rows(), x.cols() + y.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t c = 0; c < x.cols(); ++c) n.value(r, c) = x(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c) {
        n.value(r, x.cols() + c) = y(r, c);
      }
    }
  } else {
    fail(ErrorCode::InvalidArgument, "concat: axis must be 0 or 1");
  }
  n.requires_grad = na.requires_grad || nb.requires_grad;
  return emit(std::move(n), "concat");
}

Graph::NodeId Graph::slice(NodeId a, std::size_t row_begin,
                           std::size_t row_end, std::size_t col_begin,
                           std::size_t col_end) {
  const Node& na = at(a);
  const Tensor& x = na.value;
  if (row_begin >= row_end || row_end > x.rows() || col_begin >= col_end ||
      col_end > x.cols()) {
    fail(ErrorCode::Shape, "slice: range out of bounds");
  }
  Node n;
  n.op = Op::Slice;
  n.a = a;
  n.r0 = row_begin;
  n.r1 = row_end;
  n.c0 = col_begin;
  n.c1 = col_end;
  n.value = Tensor(row_end - row_begin, col_end - col_begin);
  for (std::size_t r = 0; r < n.value.rows(); ++r) {
    for (std::size_t c = 0; c < n.value.cols(); ++c) {
      n.value(r, c) = x(row_begin + r, col_begin + c);
    }
  }
  n.requires_grad = na.requires_grad;
  return emit(std::move(n), "slice");
}

Graph::NodeId Graph::sum(NodeId a) {
  const Node& na = at(a);
  double total = 0.0;
  for (std::size_t r = 0; r < na.value.rows(); ++r) {
    for (std::size_t c = 0; c < na.value.cols(); ++c) total += na.value(r, c);
  }
  Node n;
  n.op = Op::Sum;
  n.a = a;
  n.value = Tensor::scalar(total);
  n.requires_grad = na.requires_grad;
  return emit(std::move(n), "sum");
}

Graph::NodeId Graph::cross_entropy(NodeId logits, std::vector<int> targets) {
  const Node& nl = at(logits);
  const Tensor& x = nl.value;
  if (targets.size() != x.rows()) {
    fail(ErrorCode::Shape, "cross_entropy: one target per logits row required");
  }
  for (int t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= x.cols()) {
      fail(ErrorCode::InvalidArgument, "cross_entropy: target out of range");
    }
  }
  Node n;
  n.op = Op::CrossEntropy;
  n.a = logits;
  n.ids = std::move(targets);
  n.saved = Tensor(x.rows(), x.cols());  // softmax probabilities
  n.nll.resize(x.rows());
  double total = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double mx = x(r, 0);
    for (std::size_t c = 1; c < x.cols(); ++c) mx = std::max(mx, x(r, c));
    double denom = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) denom += std::exp(x(r, c) - mx);
    double lse = mx + std::log(denom);
    for (std::size_t c = 0; c < x.cols(); ++c) {
      n.saved(r, c) = std::exp(x(r, c) - lse);
    }
    double nll = lse - x(r, static_cast<std::size_t>(n.ids[r]));
    n.nll[r] = nll;
    total += nll;
  }
  n.value = Tensor::scalar(total / static_cast<double>(x.rows()));
  n.requires_grad = nl.requires_grad;
  return emit(std::move(n), "cross_entropy");
}

const Tensor& Graph::value(NodeId id) const { return at(id).value; }

const Tensor& Graph::grad(NodeId id) const { return at(id).grad; }

const std::vector<double>& Graph::per_token_nll(NodeId ce_node) const {
  const Node& n = at(ce_node);
  if (n.op != Op::CrossEntropy) {
    fail(ErrorCode::InvalidArgument,
         "per_token_nll: node is not a cross_entropy node");
  }
  return n.nll;
}

void Graph::add_grad(NodeId id, const Tensor& g) {
  Node& n = at(id);
  if (!n.requires_grad) return;
  if (!g.same_shape(n.value)) {
    fail(ErrorCode::Internal, "gradient shape mismatch during backward");
  }
  if (n.grad.empty()) {
    n.grad = Tensor(n.value.rows(), n.value.cols());
  }
  double* dst = n.grad.data();
  const double* src = g.data();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += src[i];
}

void Graph::backward(NodeId loss, double seed) {
  if (consumed_) {
    fail(ErrorCode::InvalidArgument,
         "backward: graph has already been consumed");
  }
  consumed_ = true;
  Node& top = at(loss);
  if (!top.value.is_scalar()) {
    fail(ErrorCode::InvalidArgument, "backward: target node is not a scalar");
  }
  if (top.requires_grad) {
    top.grad = Tensor::scalar(seed);
  }
  for (NodeId id = loss; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad || n.grad.empty()) continue;
    backward_node(n);
  }
}

void Graph::backward_node(Node& n) {
  const Tensor& g = n.grad;
  switch (n.op) {
    case Op::Input:
      break;
    case Op::Param:
      n.parameter->accumulate_grad(g);
      break;
    case Op::Matmul: {
      const Node& na = at(n.a);
      const Node& nb = at(n.b);
      if (na.requires_grad) {
        add_grad(n.a, tunelab::matmul(g, transposed(nb.value)));
      }
      if (nb.requires_grad) {
        add_grad(n.b, tunelab::matmul(transposed(na.value), g));
      }
      break;
    }
    case Op::Transpose:
      add_grad(n.a, transposed(g));
      break;
    case Op::Add: {
      const Node& na = at(n.a);
      const Node& nb = at(n.b);
      if (na.requires_grad) add_grad(n.a, g);
      if (nb.requires_grad) {
        if (nb.value.same_shape(g)) {
          add_grad(n.b, g);
        } else {
          Tensor gb(1, g.cols());
          for (std::size_t r = 0; r < g.rows(); ++r) {
            for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
          }
          add_grad(n.b, gb);
        }
      }
      break;
    }
    case Op::Mul: {
      const Node& na = at(n.a);
      const Node& nb = at(n.b);
      const Tensor& x = na.value;
      const Tensor& y = nb.value;
      const bool broadcast = !x.same_shape(y);
      if (na.requires_grad) {
        Tensor ga(x.rows(), x.cols());
        for (std::size_t r = 0; r < x.rows(); ++r) {
          for (std::size_t c = 0; c < x.cols(); ++c) {
            ga(r, c) = g(r, c) * (broadcast ? y(0, c) : y(r, c));
          }
        }
        add_grad(n.a, ga);
      }
      if (nb.requires_grad) {
        if (!broadcast) {
          Tensor gb(y.rows(), y.cols());
          for (std::size_t r = 0; r < y.rows(); ++r) {
            for (std::size_t c = 0; c < y.cols(); ++c) {
              gb(r, c) = g(r, c) * x(r, c);
            }
          }
          add_grad(n.b, gb);
        } else {
          Tensor gb(1, y.cols());
          for (std::size_t r = 0; r < x.rows(); ++r) {
            for (std::size_t c = 0; c < x.cols(); ++c) {
              gb(0, c) += g(r, c) * x(r, c);
            }
          }
          add_grad(n.b, gb);
        }
      }
      break;
    }
    case Op::Scale: {
      Tensor ga = g;
      for (std::size_t r = 0; r < ga.rows(); ++r) {
        for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) *= n.scalar;
      }
      add_grad(n.a, ga);
      break;
    }
    case Op::Softmax: {
      const Tensor& y = n.value;
      Tensor ga(y.rows(), y.cols());
      for (std::size_t r = 0; r < y.rows(); ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
        for (std::size_t c = 0; c < y.cols(); ++c) {
          ga(r, c) = y(r, c) * (g(r, c) - dot);
        }
      }
      add_grad(n.a, ga);
      break;
    }
    case Op::LayerNorm: {
      const Tensor& y = n.value;
      const double cols = static_cast<double>(y.cols());
      Tensor ga(y.rows(), y.cols());
      for (std::size_t r = 0; r < y.rows(); ++r) {
        double mean_g = 0.0;
        double mean_gy = 0.0;
        for (std::size_t c = 0; c < y.cols(); ++c) {
          mean_g += g(r, c);
          mean_gy += g(r, c) * y(r, c);
        }
        mean_g /= cols;
        mean_gy /= cols;
        const double inv_std = n.saved(r, 0);
        for (std::size_t c = 0; c < y.cols(); ++c) {
          ga(r, c) = inv_std * (g(r, c) - mean_g - y(r, c) * mean_gy);
        }
      }
      add_grad(n.a, ga);
      break;
    }
    case Op::Gelu: {
      const Tensor& x = at(n.a).value;
      Tensor ga(x.rows(), x.cols());
      for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) {
          double v = x(r, c);
          double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
          double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
          ga(r, c) = g(r, c) * (cdf + v * pdf);
        }
      }
      add_grad(n.a, ga);
      break;
    }
    case Op::Embedding: {
      const Tensor& t = at(n.a).value;
      Tensor gt(t.rows(), t.cols());
      for (std::size_t r = 0; r < n.ids.size(); ++r) {
        std::size_t row = static_cast<std::size_t>(n.ids[r]);
        for (std::size_t c = 0; c < t.cols(); ++c) gt(row, c) += g(r, c);
      }
      add_grad(n.a, gt);
      break;
    }
    case Op::Concat: {
      const Node& na = at(n.a);
      const Node& nb = at(n.b);
      if (n.axis == 0) {
        if (na.requires_grad) {
          Tensor ga(na.value.rows(), na.value.cols());
          for (std::size_t r = 0; r < ga.rows(); ++r) {
            for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) = g(r, c);
          }
          add_grad(n.a, ga);
        }
        if (nb.requires_grad) {
          Tensor gb(nb.value.rows(), nb.value.cols());
          for (std::size_t r = 0; r < gb.rows(); ++r) {
            for (std::size_t c = 0; c < gb.cols(); ++c) {
              gb(r, c) = g(na.value.rows() + r, c);
            }
          }
          add_grad(n.b, gb);
        }
      } else {
        if (na.requires_grad) {
          Tensor ga(na.value.rows(), na.value.cols());
          for (std::size_t r = 0; r < ga.rows(); ++r) {
            for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) = g(r, c);
          }
          add_grad(n.a, ga);
        }
        if (nb.requires_grad) {
          Tensor gb(nb.value.rows(), nb.value.cols());
          for (std::size_t r = 0; r < gb.rows(); ++r) {
            for (std::size_t c = 0; c < gb.cols(); ++c) {
              gb(r, c) = g(r, na.value.cols() + c);
            }
          }
          add_grad(n.b, gb);
        }
      }
      break;
    }
    case Op::Slice: {
      const Tensor& x = at(n.a).value;
      Tensor ga(x.rows(), x.cols());
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) {
          ga(n.r0 + r, n.c0 + c) = g(r, c);
        }
      }
      add_grad(n.a, ga);
      break;
    }
    case Op::Sum: {
      const Tensor& x = at(n.a).value;
      add_grad(n.a, Tensor::full(x.rows(), x.cols(), g(0, 0)));
      break;
    }
    case Op::CrossEntropy: {
      const Tensor& p = n.saved;
      const double s = g(0, 0) / static_cast<double>(p.rows());
      Tensor gl(p.rows(), p.cols());
      for (std::size_t r = 0; r < p.rows(); ++r) {
        for (std::size_t c = 0; c < p.cols(); ++c) gl(r, c) = s * p(r, c);
        gl(r, static_cast<std::size_t>(n.ids[r])) -= s;
      }
      add_grad(n.a, gl);
      break;
    }
  }
}

}  // namespace tunelab
