// Copyright 2026 The mtltc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <cmath>
#include <vector>

#include "mtltc/nn/layers.hpp"

namespace mtltc::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected moments. Moment buffers are sized on the first
/// step and must keep matching the parameter list afterwards.
template <typename Scalar>
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  const AdamConfig& config() const { return config_; }
  long steps() const { return step_; }

  void step(const std::vector<Param<Scalar>*>& params) {
    if (first_.empty()) {
      for (const Param<Scalar>* p : params) {
        first_.push_back(Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
        second_.push_back(Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
      }
    }
    if (first_.size() != params.size()) {
      throw ShapeError("adam: parameter list changed between steps");
    }
    ++step_;
    const double t = static_cast<double>(step_);
    const double correction1 = 1.0 - std::pow(config_.beta1, t);
    const double correction2 = 1.0 - std::pow(config_.beta2, t);
    const Scalar b1 = static_cast<Scalar>(config_.beta1);
    const Scalar b2 = static_cast<Scalar>(config_.beta2);
    const Scalar step_size = static_cast<Scalar>(config_.learning_rate / correction1);
    const Scalar sqrt_c2 = static_cast<Scalar>(std::sqrt(correction2));
    const Scalar eps = static_cast<Scalar>(config_.epsilon);
    for (std::size_t i = 0; i < params.size(); ++i) {
      Param<Scalar>& p = *params[i];
      if (p.value.rows() != first_[i].rows() || p.value.cols() != first_[i].cols()) {
        throw ShapeError("adam: moment shape mismatch for " + p.name);
      }
      auto m = first_[i].array();
      auto v = second_[i].array();
      const auto g = p.grad.array();
      m = b1 * m + (Scalar(1) - b1) * g;
      v = b2 * v + (Scalar(1) - b2) * g.square();
      p.value.array() -= step_size * m / (v.sqrt() / sqrt_c2 + eps);
    }
  }

  /// Drops moments and the step counter.
  void reset() {
    first_.clear();
    second_.clear();
    step_ = 0;
  }

 private:
  AdamConfig config_;
  long step_ = 0;
  std::vector<Matrix<Scalar>> first_;
  std::vector<Matrix<Scalar>> second_;
};

}  // namespace mtltc::nn
