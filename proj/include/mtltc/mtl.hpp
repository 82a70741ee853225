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
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mtltc/error.hpp"
#include "mtltc/flow.hpp"
#include "mtltc/labels.hpp"
#include "mtltc/nn/adam.hpp"
#include "mtltc/nn/network.hpp"

namespace mtltc {

// ---------------------------------------------------------------------------
// Architecture

enum class TrunkVariant {
  kAuto,     // reduced for k in {30, 45}, full otherwise
  kFull,     // conv32 x2, pool, conv64 x2, pool, conv128 x2, pool, fc256 x2
  kReduced,  // as kFull with one conv128 removed
};

inline bool uses_reduced_trunk(int k) { return k == 30 || k == 45; }

/// Shared convolutional trunk with one softmax head per entry of `heads`.
/// Every conv and dense layer is followed by ReLU. Throws ShapeError when
/// the trunk does not fit `k`.
nn::ArchitectureSpec flow_cnn_architecture(int k, std::vector<int> heads, TrunkVariant variant = TrunkVariant::kAuto);

/// Small trunk for gradient checks: conv4, pool, conv8, conv16, fc16.
nn::ArchitectureSpec tiny_architecture(int k, std::vector<int> heads);

enum HeadIndex : std::size_t { kBandwidthHead = 0, kDurationHead = 1, kTrafficHead = 2 };

// ---------------------------------------------------------------------------
// Data

/// Feature matrices and task labels for one set of flows.
struct LabeledDataset {
  std::vector<FeatureMatrix> features;
  std::vector<TaskLabels> labels;
  int n_bw = 5;
  int n_dur = 5;
  int n_traffic = 5;

  std::size_t size() const { return features.size(); }
  int k() const { return features.empty() ? 0 : features.front().k(); }
  std::size_t labeled_count() const {
    return static_cast<std::size_t>(
        std::count_if(labels.begin(), labels.end(), [](const TaskLabels& t) { return t.traffic_mask == 1; }));
  }
};

/// FNV-1a over the raw feature bits and labels.
std::uint64_t fingerprint(const LabeledDataset& data);

/// Subset of `data` restricted to `indices`, in that order.
LabeledDataset subset(const LabeledDataset& data, std::span<const std::size_t> indices);

/// Stacks feature matrices into a (batch * k, 2) network input.
template <typename Scalar>
nn::Batch<Scalar> stack_features(const std::vector<FeatureMatrix>& features, std::span<const std::size_t> indices) {
  nn::Batch<Scalar> b;
  b.batch = static_cast<nn::Index>(indices.size());
  const nn::Index k = features.empty() ? 0 : features[indices.empty() ? 0 : indices[0]].k();
  b.length = k;
  b.data.resize(b.batch * k, 2);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const FeatureMatrix& f = features.at(indices[i]);
    if (f.k() != k) throw ShapeError("stack_features: mixed k in one batch");
    b.data.middleRows(static_cast<nn::Index>(i) * k, k) = f.values.template cast<Scalar>();
  }
  return b;
}

template <typename Scalar>
nn::Batch<Scalar> stack_features(const std::vector<FeatureMatrix>& features) {
  std::vector<std::size_t> all(features.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return stack_features<Scalar>(features, all);
}

// ---------------------------------------------------------------------------
// Masked multi-task loss

struct MtlLossConfig {
  double lambda = 1.0;

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw UsageError("lambda must be a finite value >= 0");
  }
};

/// Losses summed over a batch. `traffic` is sum_i mask_i * loss_i without the
/// lambda weight; `traffic_term` is lambda * traffic and
/// total = bw + dur + traffic_term.
struct MtlLoss {
  double total = 0;
  double bw = 0;
  double dur = 0;
  double traffic = 0;
  double traffic_term = 0;
};

template <typename Scalar>
std::vector<nn::HeadTargets<Scalar>> mtl_targets(std::span<const TaskLabels> labels, double lambda) {
  std::vector<nn::HeadTargets<Scalar>> t(3);
  for (const TaskLabels& l : labels) {
    t[kBandwidthHead].targets.push_back(l.y_bw - 1);
    t[kBandwidthHead].weights.push_back(Scalar(1));
    t[kDurationHead].targets.push_back(l.y_dur - 1);
    t[kDurationHead].weights.push_back(Scalar(1));
    if (l.traffic_mask != 0 && !l.y_traffic) throw UsageError("label has mask 1 but no traffic class");
    t[kTrafficHead].targets.push_back(l.traffic_mask != 0 ? *l.y_traffic - 1 : 0);
    t[kTrafficHead].weights.push_back(static_cast<Scalar>(l.traffic_mask));
  }
  t[kTrafficHead].gradient_scale = static_cast<Scalar>(lambda);
  return t;
}

/// Evaluates the masked lambda-weighted objective on one batch and leaves the
/// gradient of `total` in every parameter of `net`.
template <typename Scalar>
MtlLoss masked_mtl_loss(nn::Network<Scalar>& net, const nn::Batch<Scalar>& input, std::span<const TaskLabels> labels,
                        const MtlLossConfig& config) {
  config.validate();
  if (labels.empty() || input.batch == 0) throw UsageError("masked_mtl_loss: empty batch");
  if (static_cast<nn::Index>(labels.size()) != input.batch) throw ShapeError("masked_mtl_loss: label count mismatch");
  if (net.head_count() != 3) throw ShapeError("masked_mtl_loss: network must have three heads");
  const auto losses = net.loss_and_gradient(input, mtl_targets<Scalar>(labels, config.lambda));
  MtlLoss r;
  r.bw = static_cast<double>(losses[kBandwidthHead]);
  r.dur = static_cast<double>(losses[kDurationHead]);
  r.traffic = static_cast<double>(losses[kTrafficHead]);
  r.traffic_term = config.lambda * r.traffic;
  r.total = r.bw + r.dur + r.traffic_term;
  return r;
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  double lambda = 1.0;
  int epochs = 30;
  int batch_size = 64;
  std::uint64_t seed = 1;  // shuffling
  nn::AdamConfig adam;
  int patience = 0;  // epochs without improvement before stopping; 0 disables
  double min_delta = 0.0;

  void validate() const {
    MtlLossConfig{lambda}.validate();
    if (epochs < 0) throw UsageError("epochs must be >= 0");
    if (batch_size < 1) throw UsageError("batch size must be >= 1");
    if (patience < 0) throw UsageError("patience must be >= 0");
  }
};

/// Mean losses over one epoch. Head losses are averaged over the samples
/// that supervise that head; `total` is the objective divided by sample count.
struct EpochLoss {
  double total = 0;
  std::vector<double> heads;
};

struct TrainHistory {
  std::vector<EpochLoss> epochs;
};

/// Mini-batch Adam on per-head weighted cross-entropy. Gradients are averaged
/// over each batch. The epoch loop is sequential and deterministic for a
/// given seed and data order.
template <typename Scalar>
TrainHistory train_network(nn::Network<Scalar>& net, const std::vector<FeatureMatrix>& features,
                           const std::vector<nn::HeadTargets<Scalar>>& targets, const TrainConfig& config) {
  config.validate();
  const std::size_t n = features.size();
  if (n == 0) throw UsageError("train: empty dataset");
  if (targets.size() != net.head_count()) throw ShapeError("train: target sets do not match heads");
  for (const auto& t : targets) {
    if (t.targets.size() != n || t.weights.size() != n) throw ShapeError("train: targets do not match sample count");
  }

  std::vector<double> head_weight_sum(targets.size(), 0.0);
  for (std::size_t h = 0; h < targets.size(); ++h) {
    for (Scalar w : targets[h].weights) head_weight_sum[h] += static_cast<double>(w);
  }

  std::mt19937_64 rng(config.seed);
  nn::Adam<Scalar> adam(config.adam);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  TrainHistory history;
  double best = std::numeric_limits<double>::infinity();
  int stale = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> head_sum(targets.size(), 0.0);
    double objective = 0.0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(config.batch_size));
      const std::span<const std::size_t> idx(order.data() + start, stop - start);
      const nn::Batch<Scalar> input = stack_features<Scalar>(features, idx);
      std::vector<nn::HeadTargets<Scalar>> batch_targets(targets.size());
      for (std::size_t h = 0; h < targets.size(); ++h) {
        batch_targets[h].gradient_scale = targets[h].gradient_scale;
        for (std::size_t i : idx) {
          batch_targets[h].targets.push_back(targets[h].targets[i]);
          batch_targets[h].weights.push_back(targets[h].weights[i]);
        }
      }
      const auto losses = net.loss_and_gradient(input, batch_targets);
      for (std::size_t h = 0; h < targets.size(); ++h) {
        head_sum[h] += static_cast<double>(losses[h]);
        objective += static_cast<double>(targets[h].gradient_scale) * static_cast<double>(losses[h]);
      }
      if (!std::isfinite(objective)) {
        throw NumericalError("training diverged at epoch " + std::to_string(epoch) + " (non-finite loss)");
      }
      const Scalar inv = Scalar(1) / static_cast<Scalar>(idx.size());
      for (auto* p : net.params()) p->grad *= inv;
      try {
        net.check_finite_gradients();
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " at epoch " + std::to_string(epoch));
      }
      adam.step(net.params());
    }
    EpochLoss el;
    el.total = objective / static_cast<double>(n);
    for (std::size_t h = 0; h < targets.size(); ++h) {
      el.heads.push_back(head_weight_sum[h] > 0.0 ? head_sum[h] / head_weight_sum[h] : 0.0);
    }
    history.epochs.push_back(std::move(el));

    if (config.patience > 0) {
      if (history.epochs.back().total < best - config.min_delta) {
        best = history.epochs.back().total;
        stale = 0;
      } else if (++stale >= config.patience) {
        break;
      }
    }
  }
  return history;
}

/// Trains all three heads on the masked objective. History head order is
/// bandwidth, duration, traffic.
template <typename Scalar>
TrainHistory train_mtl(nn::Network<Scalar>& net, const LabeledDataset& data, const TrainConfig& config) {
  if (data.size() == 0) throw UsageError("train: empty dataset");
  if (data.labels.size() != data.size()) throw ShapeError("train: label count mismatch");
  return train_network(net, data.features, mtl_targets<Scalar>(data.labels, config.lambda), config);
}

template <typename Scalar>
nn::Network<Scalar> make_mtl_network(int k, int n_bw, int n_dur, int n_traffic, std::uint64_t seed,
                                     TrunkVariant variant = TrunkVariant::kAuto) {
  return nn::Network<Scalar>(flow_cnn_architecture(k, {n_bw, n_dur, n_traffic}, variant), seed);
}

// ---------------------------------------------------------------------------
// Inference

/// Softmax output of every head for every sample, evaluated in chunks.
template <typename Scalar>
std::vector<nn::Matrix<Scalar>> head_probabilities(nn::Network<Scalar>& net, const std::vector<FeatureMatrix>& features,
                                                   std::size_t chunk = 256) {
  std::vector<nn::Matrix<Scalar>> out(net.head_count());
  for (std::size_t h = 0; h < net.head_count(); ++h) {
    out[h].resize(static_cast<nn::Index>(features.size()), net.spec().heads[h]);
  }
  for (std::size_t start = 0; start < features.size(); start += chunk) {
    const std::size_t stop = std::min(features.size(), start + chunk);
    std::vector<std::size_t> idx(stop - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto logits = net.forward(stack_features<Scalar>(features, idx));
    for (std::size_t h = 0; h < logits.size(); ++h) {
      out[h].middleRows(static_cast<nn::Index>(start), static_cast<nn::Index>(idx.size())) = nn::softmax_rows(logits[h]);
    }
  }
  return out;
}

/// 1-based argmax of a probability row; the first maximum wins.
template <typename Derived>
int argmax_class(const Eigen::MatrixBase<Derived>& row) {
  Eigen::Index best = 0;
  row.maxCoeff(&best);
  return static_cast<int>(best) + 1;
}

struct MtlPrediction {
  int bw_class = 0;
  int dur_class = 0;
  int traffic_class = 0;
  double p_traffic_max = 0;
};

template <typename Scalar>
std::vector<MtlPrediction> predict(nn::Network<Scalar>& net, const std::vector<FeatureMatrix>& features) {
  if (net.head_count() != 3) throw ShapeError("predict: network must have three heads");
  const auto probs = head_probabilities(net, features);
  std::vector<MtlPrediction> out(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto r = static_cast<nn::Index>(i);
    out[i].bw_class = argmax_class(probs[kBandwidthHead].row(r));
    out[i].dur_class = argmax_class(probs[kDurationHead].row(r));
    out[i].traffic_class = argmax_class(probs[kTrafficHead].row(r));
    out[i].p_traffic_max = static_cast<double>(probs[kTrafficHead].row(r).maxCoeff());
  }
  return out;
}

}  // namespace mtltc
