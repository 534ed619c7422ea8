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

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "tunelab/parameter.hpp"

namespace tunelab {

/// Shared optimizer contract: a step visits every parameter in the list,
/// updates the non-frozen ones in place from their accumulated gradients,
/// leaves frozen ones bit-identical, and clears all gradients afterwards.
/// A non-frozen parameter without a gradient is an error.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  void step(const std::vector<Parameter*>& params);

 protected:
  virtual void update(Parameter& p) = 0;
  virtual void begin_step() {}
};

class SgdOptimizer : public Optimizer {
 public:
  explicit SgdOptimizer(double lr) : lr_(lr) {}

 private:
  void update(Parameter& p) override;
  double lr_;
};

/// Adam with bias correction (beta1 0.9, beta2 0.999, eps 1e-8). Moment
/// state is keyed by parameter identity and created on first update.
class AdamOptimizer : public Optimizer {
 public:
  explicit AdamOptimizer(double lr, double beta1 = 0.9, double beta2 = 0.999,
                         double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

 private:
  struct Moments {
    Tensor m;
    Tensor v;
  };

  void begin_step() override { ++t_; }
  void update(Parameter& p) override;

  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  std::uint64_t t_ = 0;
  std::unordered_map<const Parameter*, Moments> state_;
};

}  // namespace tunelab
