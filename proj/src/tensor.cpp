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

#include "tunelab/tensor.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstring>

#include "tunelab/error.hpp"

namespace tunelab {

using EigenMap = Eigen::Map<
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstEigenMap = Eigen::Map<const Eigen::Matrix<
    double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

Tensor::Tensor(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), v_(rows * cols, 0.0) {
  if (rows == 0 || cols == 0) {
    fail(ErrorCode::Shape, "tensor dimensions must be positive");
  }
}

Tensor Tensor::scalar(double v) {
  Tensor t(1, 1);
  t.v_[0] = v;
  return t;
}

Tensor Tensor::full(std::size_t rows, std::size_t cols, double v) {
  Tensor t(rows, cols);
  t.fill(v);
  return t;
}

double& Tensor::at(std::size_t r, std::size_t c) {
  if (r >= rows_ || c >= cols_) {
    fail(ErrorCode::Shape, "tensor index out of range");
  }
  return v_[r * cols_ + c];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  if (r >= rows_ || c >= cols_) {
    fail(ErrorCode::Shape, "tensor index out of range");
  }
  return v_[r * cols_ + c];
}

bool Tensor::all_finite() const {
  for (double x : v_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void Tensor::fill(double v) {
  for (double& x : v_) x = v;
}

bool Tensor::bitwise_equal(const Tensor& other) const {
  if (!same_shape(other)) return false;
  if (v_.empty()) return other.v_.empty();
  return std::memcmp(v_.data(), other.v_.data(),
                     v_.size() * sizeof(double)) == 0;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    fail(ErrorCode::Shape, "matmul: inner dimensions do not match");
  }
  Tensor out(a.rows(), b.cols());
  ConstEigenMap ma(a.data(), static_cast<Eigen::Index>(a.rows()),
                   static_cast<Eigen::Index>(a.cols()));
  ConstEigenMap mb(b.data(), static_cast<Eigen::Index>(b.rows()),
                   static_cast<Eigen::Index>(b.cols()));
  EigenMap mo(out.data(), static_cast<Eigen::Index>(out.rows()),
              static_cast<Eigen::Index>(out.cols()));
  mo.noalias() = ma * mb;
  return out;
}

Tensor transposed(const Tensor& a) {
  Tensor out(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) {
      out(c, r) = a(r, c);
    }
  }
  return out;
}

}  // namespace tunelab
