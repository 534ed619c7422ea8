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

#include "tunelab/optimizer.hpp"

#include <cmath>

#include "tunelab/error.hpp"

namespace tunelab {

void Optimizer::step(const std::vector<Parameter*>& params) {
  for (Parameter* p : params) {
    if (p == nullptr) {
      fail(ErrorCode::InvalidArgument, "optimizer: null parameter");
    }
    if (!p->frozen && !p->grad.has_value()) {
      fail(ErrorCode::InvalidArgument,
           "optimizer: trainable parameter '" + p->id +
               "' has no gradient; run backward first");
    }
  }
  begin_step();
  for (Parameter* p : params) {
    if (!p->frozen) {
      update(*p);
    }
    p->clear_grad();
  }
}

void SgdOptimizer::update(Parameter& p) {
  double* w = p.value.data();
  const double* g = p.grad->data();
  for (std::size_t i = 0; i < p.value.size(); ++i) {
    w[i] -= lr_ * g[i];
  }
}

void AdamOptimizer::update(Parameter& p) {
  Moments& mom = state_[&p];
  if (mom.m.empty()) {
    mom.m = Tensor(p.value.rows(), p.value.cols());
    mom.v = Tensor(p.value.rows(), p.value.cols());
  }
  if (!mom.m.same_shape(p.value)) {
    fail(ErrorCode::InvalidArgument,
         "adam: parameter '" + p.id + "' changed shape across steps");
  }
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  double* w = p.value.data();
  const double* g = p.grad->data();
  double* m = mom.m.data();
  double* v = mom.v.data();
  for (std::size_t i = 0; i < p.value.size(); ++i) {
    m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
    v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    w[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
  }
}

}  // namespace tunelab
