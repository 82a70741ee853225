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

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mtltc/flow.hpp"

namespace mtltc {

/// Class boundaries for bandwidth (kbit/s) and duration (s). n dividers define
/// n + 1 classes; both arrays are strictly increasing.
struct DividerSet {
  std::vector<double> bw;
  std::vector<double> dur;

  int bw_classes() const { return static_cast<int>(bw.size()) + 1; }
  int dur_classes() const { return static_cast<int>(dur.size()) + 1; }

  /// Throws UsageError unless both arrays are non-empty, finite and strictly increasing.
  void validate() const;

  bool operator==(const DividerSet&) const = default;
};

nlohmann::json to_json(const DividerSet& d);
DividerSet dividers_from_json(const nlohmann::json& j);
DividerSet read_dividers_file(const std::string& path);

/// 1-based class of `value`: 1 below the first divider, j + 1 on
/// [div_j, div_{j+1}), and n + 1 at or above the last divider.
int assign_class(double value, std::span<const double> dividers);

/// Midpoints between consecutive sorted per-class means. n classes give
/// n - 1 dividers.
std::vector<double> compute_dividers(const std::map<int, std::vector<double>>& values_by_class);

/// Dividers for both axes from the flows at `indices`, grouped by traffic label.
DividerSet dividers_from_flows(const std::vector<FlowSample>& flows, std::span<const std::size_t> indices);

struct TaskLabels {
  int y_bw = 0;
  int y_dur = 0;
  std::optional<int> y_traffic;
  int traffic_mask = 0;

  bool operator==(const TaskLabels&) const = default;
};

/// Picks `labeled_per_class` flows uniformly without replacement from every
/// traffic class present in `candidates`. Returns flow indices in ascending order.
std::vector<std::size_t> sample_labeled(const std::vector<FlowSample>& flows, std::span<const std::size_t> candidates,
                                        int labeled_per_class, std::uint64_t seed);

/// Labels for every flow in `flows`: bandwidth/duration classes always, traffic
/// class only for the `labeled` indices.
std::vector<TaskLabels> make_labels(const std::vector<FlowSample>& flows, const DividerSet& dividers,
                                    std::span<const std::size_t> labeled);

/// Convenience wrapper: samples the labeled subset over all flows and labels them.
std::vector<TaskLabels> build_label_set(const std::vector<FlowSample>& flows, const DividerSet& dividers,
                                        int labeled_per_class, std::uint64_t seed);

/// Distinct traffic labels present in `flows`, ascending.
std::vector<int> traffic_classes(const std::vector<FlowSample>& flows);

}  // namespace mtltc
