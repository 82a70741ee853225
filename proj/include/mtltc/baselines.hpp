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
#include <numeric>
#include <string>
#include <vector>

#include "mtltc/mtl.hpp"

namespace mtltc {

enum class Task { kBandwidth, kDuration, kTraffic };

const char* to_string(Task t);
Task task_from_string(const std::string& name);

/// 0-based id of a (bandwidth, duration) class pair: (y_bw - 1) * n_dur + (y_dur - 1).
inline int joint_label(int y_bw, int y_dur, int n_dur) { return (y_bw - 1) * n_dur + (y_dur - 1); }

struct JointPair {
  int y_bw;
  int y_dur;
};

inline JointPair split_joint_label(int id, int n_dur) { return {id / n_dur + 1, id % n_dur + 1}; }

/// Indices of samples that carry a traffic label.
inline std::vector<std::size_t> labeled_indices(const LabeledDataset& data) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.labels[i].traffic_mask == 1) idx.push_back(i);
  }
  return idx;
}

template <typename Scalar>
nn::HeadTargets<Scalar> task_targets(const LabeledDataset& data, Task task) {
  nn::HeadTargets<Scalar> t;
  for (const TaskLabels& l : data.labels) {
    switch (task) {
      case Task::kBandwidth: t.targets.push_back(l.y_bw - 1); break;
      case Task::kDuration: t.targets.push_back(l.y_dur - 1); break;
      case Task::kTraffic: t.targets.push_back(l.traffic_mask ? *l.y_traffic - 1 : 0); break;
    }
    t.weights.push_back(task == Task::kTraffic ? static_cast<Scalar>(l.traffic_mask) : Scalar(1));
  }
  return t;
}

/// Same trunk with one head, trained on one task. TRAFFIC trains on the
/// labeled samples only; BW and DUR use every sample. `net` must have been
/// built with a single head sized for `task`.
template <typename Scalar>
TrainHistory train_single_task(nn::Network<Scalar>& net, const LabeledDataset& data, Task task,
                               const TrainConfig& config) {
  if (net.head_count() != 1) throw ShapeError("single-task network must have exactly one head");
  if (task == Task::kTraffic) {
    const auto idx = labeled_indices(data);
    if (idx.empty()) throw UsageError("single-task traffic training needs at least one labeled sample");
    const LabeledDataset labeled = subset(data, idx);
    return train_network(net, labeled.features, {task_targets<Scalar>(labeled, task)}, config);
  }
  if (data.size() == 0) throw UsageError("train: empty dataset");
  return train_network(net, data.features, {task_targets<Scalar>(data, task)}, config);
}

inline int task_classes(const LabeledDataset& data, Task task) {
  switch (task) {
    case Task::kBandwidth: return data.n_bw;
    case Task::kDuration: return data.n_dur;
    case Task::kTraffic: return data.n_traffic;
  }
  return 0;
}

template <typename Scalar>
nn::Network<Scalar> make_single_task_network(int k, int classes, std::uint64_t seed,
                                              TrunkVariant variant = TrunkVariant::kAuto) {
  return nn::Network<Scalar>(flow_cnn_architecture(k, {classes}, variant), seed);
}

struct TransferConfig {
  TrainConfig stage1;
  TrainConfig stage2;
  std::uint64_t head_seed = 1;  // initialization of the replacement head
};

struct TransferResult {
  TrainHistory stage1;
  TrainHistory stage2;
};

/// Stage 1 trains trunk + one head on the joint (bandwidth, duration) class
/// over every sample. Stage 2 swaps in a fresh traffic head and fine-tunes the
/// whole network on labeled samples with a new optimizer. `net` must have a
/// single head of n_bw * n_dur classes.
template <typename Scalar>
TransferResult train_transfer(nn::Network<Scalar>& net, const LabeledDataset& data, const TransferConfig& config) {
  if (net.head_count() != 1 || net.spec().heads[0] != data.n_bw * data.n_dur) {
    throw ShapeError("transfer network must have one head of n_bw * n_dur classes");
  }
  if (data.size() == 0) throw UsageError("train: empty dataset");
  const auto idx = labeled_indices(data);
  if (idx.empty()) throw UsageError("transfer stage 2 needs at least one labeled sample");

  nn::HeadTargets<Scalar> joint;
  for (const TaskLabels& l : data.labels) {
    joint.targets.push_back(joint_label(l.y_bw, l.y_dur, data.n_dur));
    joint.weights.push_back(Scalar(1));
  }
  TransferResult r;
  r.stage1 = train_network(net, data.features, {joint}, config.stage1);

  net.replace_head(0, data.n_traffic, config.head_seed);
  const LabeledDataset labeled = subset(data, idx);
  r.stage2 = train_network(net, labeled.features, {task_targets<Scalar>(labeled, Task::kTraffic)}, config.stage2);
  return r;
}

template <typename Scalar>
nn::Network<Scalar> make_transfer_network(int k, int n_bw, int n_dur, std::uint64_t seed,
                                          TrunkVariant variant = TrunkVariant::kAuto) {
  return nn::Network<Scalar>(flow_cnn_architecture(k, {n_bw * n_dur}, variant), seed);
}

}  // namespace mtltc
