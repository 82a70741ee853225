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


#include "mtltc/labels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "mtltc/error.hpp"

namespace mtltc {

namespace {

void validate_axis(const std::vector<double>& d, const char* axis) {
  if (d.empty()) throw UsageError(std::string("dividers: ") + axis + " needs at least one divider");
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d[i])) throw UsageError(std::string("dividers: ") + axis + " contains a non-finite value");
    if (i > 0 && !(d[i] > d[i - 1])) {
      throw UsageError(std::string("dividers: ") + axis + " must be strictly increasing");
    }
  }
}

}  // namespace

void DividerSet::validate() const {
  validate_axis(bw, "bw");
  validate_axis(dur, "dur");
}

nlohmann::json to_json(const DividerSet& d) { return {{"bw", d.bw}, {"dur", d.dur}}; }

DividerSet dividers_from_json(const nlohmann::json& j) {
  DividerSet d;
  try {
    d.bw = j.at("bw").get<std::vector<double>>();
    d.dur = j.at("dur").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataFormatError(std::string("dividers json: ") + e.what());
  }
  d.validate();
  return d;
}

DividerSet read_dividers_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dividers file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataFormatError("dividers file '" + path + "': " + e.what());
  }
  return dividers_from_json(j);
}

int assign_class(double value, std::span<const double> dividers) {
  if (!std::isfinite(value)) throw NumericalError("assign_class: non-finite value");
  return static_cast<int>(std::upper_bound(dividers.begin(), dividers.end(), value) - dividers.begin()) + 1;
}

std::vector<double> compute_dividers(const std::map<int, std::vector<double>>& values_by_class) {
  if (values_by_class.size() < 2) throw UsageError("compute_dividers: need at least two classes");
  std::vector<double> means;
  for (const auto& [label, values] : values_by_class) {
    if (values.empty()) throw UsageError("compute_dividers: class " + std::to_string(label) + " has no values");
    // Summing in sorted order makes the mean independent of input order.
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    means.push_back(std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size()));
  }
  std::sort(means.begin(), means.end());
  std::vector<double> dividers;
  for (std::size_t i = 1; i < means.size(); ++i) {
    if (means[i] == means[i - 1]) {
      throw UsageError("compute_dividers: two classes share the mean " + format_double(means[i]));
    }
    dividers.push_back((means[i - 1] + means[i]) / 2.0);
  }
  return dividers;
}

DividerSet dividers_from_flows(const std::vector<FlowSample>& flows, std::span<const std::size_t> indices) {
  std::map<int, std::vector<double>> bw;
  std::map<int, std::vector<double>> dur;
  for (std::size_t i : indices) {
    const FlowSample& f = flows.at(i);
    if (!f.traffic_label) continue;
    bw[*f.traffic_label].push_back(f.bandwidth);
    dur[*f.traffic_label].push_back(f.duration);
  }
  return {compute_dividers(bw), compute_dividers(dur)};
}

std::vector<int> traffic_classes(const std::vector<FlowSample>& flows) {
  std::set<int> seen;
  for (const auto& f : flows) {
    if (f.traffic_label) seen.insert(*f.traffic_label);
  }
  return {seen.begin(), seen.end()};
}

std::vector<std::size_t> sample_labeled(const std::vector<FlowSample>& flows, std::span<const std::size_t> candidates,
                                        int labeled_per_class, std::uint64_t seed) {
  if (labeled_per_class < 0) throw UsageError("labeled_per_class must be >= 0");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i : candidates) {
    const auto& label = flows.at(i).traffic_label;
    if (label) by_class[*label].push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen;
  for (auto& [label, pool] : by_class) {
    if (static_cast<std::size_t>(labeled_per_class) > pool.size()) {
      throw UsageError("class " + std::to_string(label) + " has only " + std::to_string(pool.size()) +
                       " labeled flows, " + std::to_string(labeled_per_class) + " requested");
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    chosen.insert(chosen.end(), pool.begin(), pool.begin() + labeled_per_class);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

std::vector<TaskLabels> make_labels(const std::vector<FlowSample>& flows, const DividerSet& dividers,
                                    std::span<const std::size_t> labeled) {
  dividers.validate();
  std::vector<TaskLabels> out(flows.size());
  for (std::size_t i = 0; i < flows.size(); ++i) {
    out[i].y_bw = assign_class(flows[i].bandwidth, dividers.bw);
    out[i].y_dur = assign_class(flows[i].duration, dividers.dur);
  }
  for (std::size_t i : labeled) {
    const auto& label = flows.at(i).traffic_label;
    if (!label) throw UsageError("flow " + std::to_string(i) + " selected as labeled but has no traffic label");
    out[i].y_traffic = *label;
    out[i].traffic_mask = 1;
  }
  return out;
}

std::vector<TaskLabels> build_label_set(const std::vector<FlowSample>& flows, const DividerSet& dividers,
                                        int labeled_per_class, std::uint64_t seed) {
  std::vector<std::size_t> all(flows.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto labeled = sample_labeled(flows, all, labeled_per_class, seed);
  return make_labels(flows, dividers, labeled);
}

}  // namespace mtltc
