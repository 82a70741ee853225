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

#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "mtltc/nn/layers.hpp"

namespace mtltc::nn {

enum class LayerKind { kConv1D, kMaxPool1D, kDense, kReLU, kFlatten, kSoftmax };

const char* to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& name);

/// One layer of a trunk description. `units` is the filter count for
/// convolutions and the neuron count for dense layers; `kernel` is only
/// meaningful for convolutions and pooling.
struct LayerSpec {
  LayerKind kind = LayerKind::kReLU;
  int units = 0;
  int kernel = 0;

  static LayerSpec conv(int filters, int kernel = 3) { return {LayerKind::kConv1D, filters, kernel}; }
  static LayerSpec pool() { return {LayerKind::kMaxPool1D, 0, 2}; }
  static LayerSpec dense(int neurons) { return {LayerKind::kDense, neurons, 0}; }
  static LayerSpec relu() { return {LayerKind::kReLU, 0, 0}; }
  static LayerSpec flatten() { return {LayerKind::kFlatten, 0, 0}; }

  bool operator==(const LayerSpec&) const = default;
};

/// A shared trunk followed by one softmax head per entry of `heads`.
struct ArchitectureSpec {
  int input_length = 0;
  int input_channels = 2;
  std::vector<LayerSpec> trunk;
  std::vector<int> heads;

  bool operator==(const ArchitectureSpec&) const = default;
};

/// Sequence length after each trunk layer plus the width feeding the heads.
struct ShapeTrace {
  std::vector<int> lengths;
  int flatten_width = 0;
  int output_width = 0;
};

/// Walks the trunk shape algebra. Throws ShapeError when the sequence length
/// reaches zero (or below a kernel) before the trunk is complete.
ShapeTrace trace_shapes(const ArchitectureSpec& spec);

template <typename Scalar>
using Layer = std::variant<Conv1D<Scalar>, MaxPool1D<Scalar>, ReLU<Scalar>, Flatten<Scalar>, Dense<Scalar>>;

/// Per-head supervision: a 0-based target and a loss weight per sample.
/// Samples with weight 0 are skipped entirely for that head. The reported
/// loss is sum(weight * loss); the back-propagated gradient is additionally
/// multiplied by `gradient_scale`, and a scale of 0 cuts the head off.
template <typename Scalar>
struct HeadTargets {
  std::vector<int> targets;
  std::vector<Scalar> weights;
  Scalar gradient_scale = Scalar(1);
};

/// Heads start with weights this fraction of the Glorot range so that a fresh
/// network predicts close to uniform class probabilities.
inline constexpr double kHeadInitGain = 0.1;

template <typename Scalar>
class Network {
 public:
  Network(ArchitectureSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
    trace_shapes(spec_);
    build(seed);
  }

  const ArchitectureSpec& spec() const { return spec_; }
  std::size_t head_count() const { return heads_.size(); }
  Dense<Scalar>& head(std::size_t i) { return heads_.at(i); }
  const Dense<Scalar>& head(std::size_t i) const { return heads_.at(i); }

  /// Replaces head `i` with a freshly initialized layer of `classes` outputs.
  void replace_head(std::size_t i, int classes, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Dense<Scalar> fresh(heads_.at(i).inputs(), classes, "head" + std::to_string(i));
    fresh.init_glorot_uniform(rng, kHeadInitGain);
    heads_[i] = std::move(fresh);
    spec_.heads[i] = classes;
  }

  Batch<Scalar> trunk_forward(const Batch<Scalar>& input) {
    if (input.length != spec_.input_length || input.channels() != spec_.input_channels) {
      throw ShapeError("network: expected input " + std::to_string(spec_.input_length) + "x" +
                       std::to_string(spec_.input_channels) + ", got " +
                       std::to_string(input.length) + "x" + std::to_string(input.channels()));
    }
    Batch<Scalar> x = input;
    for (auto& layer : trunk_) {
      x = std::visit([&](auto& l) { return l.forward(x); }, layer);
    }
    return x;
  }

  /// Logits of every head, all computed from a single trunk pass.
  std::vector<Matrix<Scalar>> forward(const Batch<Scalar>& input) {
    const Batch<Scalar> features = trunk_forward(input);
    std::vector<Matrix<Scalar>> logits;
    logits.reserve(heads_.size());
    for (auto& h : heads_) logits.push_back(h.forward(features).data);
    return logits;
  }

  /// Weighted cross-entropy per head (sum over samples) with gradients of the
  /// summed loss written into every parameter.
  std::vector<Scalar> loss_and_gradient(const Batch<Scalar>& input,
                                        const std::vector<HeadTargets<Scalar>>& targets) {
    if (targets.size() != heads_.size()) {
      throw ShapeError("network: " + std::to_string(targets.size()) + " target sets for " +
                       std::to_string(heads_.size()) + " heads");
    }
    const Batch<Scalar> features = trunk_forward(input);
    std::vector<Scalar> losses(heads_.size(), Scalar(0));
    Batch<Scalar> grad_features;
    grad_features.batch = features.batch;
    grad_features.length = 1;
    grad_features.data = Matrix<Scalar>::Zero(features.data.rows(), features.data.cols());
    for (std::size_t h = 0; h < heads_.size(); ++h) {
      const Batch<Scalar> logits = heads_[h].forward(features);
      Batch<Scalar> grad_logits;
      grad_logits.batch = logits.batch;
      grad_logits.length = 1;
      losses[h] = weighted_xent(logits.data, targets[h].targets, targets[h].weights, grad_logits.data);
      if (targets[h].gradient_scale == Scalar(0)) {
        grad_logits.data.setZero();
      } else if (targets[h].gradient_scale != Scalar(1)) {
        grad_logits.data *= targets[h].gradient_scale;
      }
      grad_features.data += heads_[h].backward(grad_logits).data;
    }
    Batch<Scalar> g = std::move(grad_features);
    for (auto it = trunk_.rbegin(); it != trunk_.rend(); ++it) {
      g = std::visit([&](auto& l) { return l.backward(g); }, *it);
    }
    return losses;
  }

  std::vector<Param<Scalar>*> trunk_params() {
    std::vector<Param<Scalar>*> out;
    for (auto& layer : trunk_) {
      if (auto* c = std::get_if<Conv1D<Scalar>>(&layer)) {
        out.push_back(&c->weight());
        out.push_back(&c->bias());
      } else if (auto* d = std::get_if<Dense<Scalar>>(&layer)) {
        out.push_back(&d->weight());
        out.push_back(&d->bias());
      }
    }
    return out;
  }

  std::vector<Param<Scalar>*> head_params(std::size_t i) {
    return {&heads_.at(i).weight(), &heads_.at(i).bias()};
  }

  std::vector<Param<Scalar>*> params() {
    std::vector<Param<Scalar>*> out = trunk_params();
    for (std::size_t i = 0; i < heads_.size(); ++i) {
      for (auto* p : head_params(i)) out.push_back(p);
    }
    return out;
  }

  std::vector<const Param<Scalar>*> params() const {
    std::vector<const Param<Scalar>*> out;
    for (auto* p : const_cast<Network*>(this)->params()) out.push_back(p);
    return out;
  }

  Index parameter_count() const {
    Index n = 0;
    for (const auto* p : params()) n += p->value.size();
    return n;
  }

  void check_finite_gradients() {
    for (const auto* p : params()) {
      if (!p->grad.allFinite()) throw NumericalError("non-finite gradient in " + p->name);
    }
  }

 private:
  void build(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Index length = spec_.input_length;
    Index channels = spec_.input_channels;
    int conv_id = 0;
    int dense_id = 0;
    for (const LayerSpec& ls : spec_.trunk) {
      switch (ls.kind) {
        case LayerKind::kConv1D: {
          Conv1D<Scalar> c(channels, ls.units, ls.kernel, "conv" + std::to_string(conv_id++));
          c.init_he_uniform(rng);
          length = c.output_length(length);
          channels = ls.units;
          trunk_.emplace_back(std::move(c));
          break;
        }
        case LayerKind::kMaxPool1D:
          length /= 2;
          trunk_.emplace_back(MaxPool1D<Scalar>{});
          break;
        case LayerKind::kReLU:
          trunk_.emplace_back(ReLU<Scalar>{});
          break;
        case LayerKind::kFlatten:
          channels *= length;
          length = 1;
          trunk_.emplace_back(Flatten<Scalar>{});
          break;
        case LayerKind::kDense: {
          Dense<Scalar> d(channels, ls.units, "fc" + std::to_string(dense_id++));
          d.init_he_uniform(rng);
          channels = ls.units;
          trunk_.emplace_back(std::move(d));
          break;
        }
        case LayerKind::kSoftmax:
          throw ShapeError("network: softmax belongs to heads, not the trunk");
      }
    }
    for (std::size_t h = 0; h < spec_.heads.size(); ++h) {
      Dense<Scalar> d(channels, spec_.heads[h], "head" + std::to_string(h));
      d.init_glorot_uniform(rng, kHeadInitGain);
      heads_.push_back(std::move(d));
    }
  }

  ArchitectureSpec spec_;
  std::vector<Layer<Scalar>> trunk_;
  std::vector<Dense<Scalar>> heads_;
};

}  // namespace mtltc::nn
