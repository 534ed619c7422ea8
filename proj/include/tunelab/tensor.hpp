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
#include <cstdint>
#include <vector>

namespace tunelab {

/// Dense row-major matrix of doubles. Scalars are 1x1, row vectors are 1xN.
/// This is the only numeric container used by the autograd engine and the
/// model; all shapes in this library are rank-2.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols);  // zero-filled

  static Tensor scalar(double v);
  static Tensor full(std::size_t rows, std::size_t cols, double v);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }
  bool is_scalar() const { return rows_ == 1 && cols_ == 1; }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }

  double& operator()(std::size_t r, std::size_t c) { return v_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return v_[r * cols_ + c];
  }
  double& at(std::size_t r, std::size_t c);
  double at(std::size_t r, std::size_t c) const;

  bool same_shape(const Tensor& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const;

  void fill(double v);
  void zero() { fill(0.0); }

  /// Exact byte-level equality (shape and payload).
  bool bitwise_equal(const Tensor& other) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> v_;
};

// Plain (non-recorded) kernels used by optimizers and tests. Recorded ops
// live on Graph.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transposed(const Tensor& a);

}  // namespace tunelab
