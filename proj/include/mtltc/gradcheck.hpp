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

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mtltc/nn/network.hpp"

namespace mtltc {

struct GradientCheckOptions {
  double step = 1e-4;
  /// Smaller steps retried for an entry whose first estimate disagrees, which
  /// happens when +/-step moves a ReLU or max-pool across its switch point.
  std::vector<double> fallback_steps = {1e-5, 1e-6};
  double tolerance = 1e-4;
  double floor = 1e-6;  // denominator floor for near-zero gradients
};

struct GradientCheckEntry {
  std::string param;
  nn::Index index = 0;
  double analytic = 0;
  double numeric = 0;
  double relative_error = 0;
};

struct GradientCheckReport {
  std::size_t checked = 0;
  std::size_t passed = 0;
  double max_relative_error = 0;
  GradientCheckEntry worst;
  std::vector<GradientCheckEntry> failures;

  bool ok() const { return checked > 0 && passed == checked; }
};

inline double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Sum over heads of gradient_scale * weighted cross-entropy, without touching
/// the stored gradients.
template <typename Scalar>
double scaled_objective(nn::Network<Scalar>& net, const nn::Batch<Scalar>& input,
                        const std::vector<nn::HeadTargets<Scalar>>& targets) {
  const auto logits = net.forward(input);
  double total = 0;
  nn::Matrix<Scalar> scratch;
  for (std::size_t h = 0; h < logits.size(); ++h) {
    const Scalar loss = nn::weighted_xent(logits[h], targets[h].targets, targets[h].weights, scratch);
    total += static_cast<double>(targets[h].gradient_scale) * static_cast<double>(loss);
  }
  return total;
}

/// Central finite differences on every parameter entry of `net`.
template <typename Scalar>
GradientCheckReport check_gradients(nn::Network<Scalar>& net, const nn::Batch<Scalar>& input,
                                    const std::vector<nn::HeadTargets<Scalar>>& targets,
                                    const GradientCheckOptions& options = {}) {
  net.loss_and_gradient(input, targets);
  std::vector<nn::Matrix<Scalar>> analytic;
  for (const auto* p : net.params()) analytic.push_back(p->grad);

  GradientCheckReport report;
  auto params = net.params();
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    nn::Param<Scalar>& p = *params[pi];
    for (nn::Index i = 0; i < p.value.size(); ++i) {
      Scalar& theta = p.value.data()[i];
      const Scalar saved = theta;
      auto estimate = [&](double h) {
        theta = saved + static_cast<Scalar>(h);
        const double up = scaled_objective(net, input, targets);
        theta = saved - static_cast<Scalar>(h);
        const double down = scaled_objective(net, input, targets);
        theta = saved;
        return (up - down) / (2 * h);
      };
      GradientCheckEntry e{p.name, i, static_cast<double>(analytic[pi].data()[i]), 0, 0};
      e.numeric = estimate(options.step);
      e.relative_error = relative_error(e.analytic, e.numeric, options.floor);
      for (double h : options.fallback_steps) {
        if (e.relative_error < options.tolerance) break;
        const double n = estimate(h);
        const double err = relative_error(e.analytic, n, options.floor);
        if (err < e.relative_error) {
          e.numeric = n;
          e.relative_error = err;
        }
      }
      ++report.checked;
      if (e.relative_error < options.tolerance) {
        ++report.passed;
      } else {
        report.failures.push_back(e);
      }
      if (e.relative_error >= report.max_relative_error) {
        report.max_relative_error = e.relative_error;
        report.worst = e;
      }
    }
  }
  return report;
}

/// Checks one layer in isolation under the objective sum(R .* forward(x)) for
/// a fixed random R, covering both the input gradient and `params`.
template <typename Scalar, typename Layer, typename Rng>
GradientCheckReport check_layer_gradients(Layer& layer, nn::Batch<Scalar> input, std::vector<nn::Param<Scalar>*> params,
                                          Rng& rng, const GradientCheckOptions& options = {}) {
  const nn::Batch<Scalar> probe = layer.forward(input);
  nn::Matrix<Scalar> weights(probe.data.rows(), probe.data.cols());
  nn::fill_uniform(weights, 1.0, rng);
  nn::Batch<Scalar> upstream = probe;
  upstream.data = weights;
  const nn::Batch<Scalar> grad_input = layer.backward(upstream);
  std::vector<nn::Matrix<Scalar>> analytic;
  for (const auto* p : params) analytic.push_back(p->grad);

  auto objective = [&] { return static_cast<double>((layer.forward(input).data.array() * weights.array()).sum()); };
  GradientCheckReport report;
  auto check = [&](const std::string& name, nn::Index index, Scalar& theta, double expected) {
    const Scalar saved = theta;
    auto estimate = [&](double h) {
      theta = saved + static_cast<Scalar>(h);
      const double up = objective();
      theta = saved - static_cast<Scalar>(h);
      const double down = objective();
      theta = saved;
      return (up - down) / (2 * h);
    };
    GradientCheckEntry e{name, index, expected, estimate(options.step), 0};
    e.relative_error = relative_error(e.analytic, e.numeric, options.floor);
    for (double h : options.fallback_steps) {
      if (e.relative_error < options.tolerance) break;
      const double n = estimate(h);
      if (const double err = relative_error(e.analytic, n, options.floor); err < e.relative_error) {
        e.numeric = n;
        e.relative_error = err;
      }
    }
    ++report.checked;
    if (e.relative_error < options.tolerance) ++report.passed;
    else report.failures.push_back(e);
    if (e.relative_error >= report.max_relative_error) {
      report.max_relative_error = e.relative_error;
      report.worst = e;
    }
  };
  for (nn::Index i = 0; i < input.data.size(); ++i) {
    check("input", i, input.data.data()[i], static_cast<double>(grad_input.data.data()[i]));
  }
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    for (nn::Index i = 0; i < params[pi]->value.size(); ++i) {
      check(params[pi]->name, i, params[pi]->value.data()[i], static_cast<double>(analytic[pi].data()[i]));
    }
  }
  return report;
}

}  // namespace mtltc
