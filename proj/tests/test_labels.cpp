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


#include <doctest.h>

#include <algorithm>
#include <random>

#include "mtltc/error.hpp"
#include "mtltc/labels.hpp"

using namespace mtltc;

namespace {

int scan_class(double v, const std::vector<double>& d) {
  int c = 1;
  for (double x : d) {
    if (v >= x) ++c;
  }
  return c;
}

FlowSample labeled_flow(int label, double bw, double dur) {
  FlowSample f;
  f.relative_time = {0.0};
  f.signed_length = {1.0};
  f.traffic_label = label;
  f.bandwidth = bw;
  f.duration = dur;
  return f;
}

std::vector<FlowSample> class_flows(int classes, int per_class) {
  std::vector<FlowSample> out;
  for (int i = 0; i < per_class; ++i) {
    for (int c = 1; c <= classes; ++c) out.push_back(labeled_flow(c, 10.0 * c + i * 0.01, c + i * 0.001));
  }
  return out;
}

}  // namespace

TEST_CASE("class assignment") {
  const std::vector<double> d = {6.30, 20.96, 44.26, 85.27};
  CHECK(assign_class(2.77, d) == 1);
  CHECK(assign_class(6.30, d) == 2);
  CHECK(assign_class(20.959, d) == 2);
  CHECK(assign_class(85.27, d) == 5);
  CHECK(assign_class(1e9, d) == 5);
  CHECK(assign_class(-1.0, d) == 1);
  CHECK_THROWS_AS(assign_class(std::nan(""), d), NumericalError);
  CHECK_THROWS_AS(assign_class(INFINITY, d), NumericalError);
}

TEST_CASE("class assignment matches a linear scan and is monotone") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-10.0, 200.0);
  const std::vector<double> d = {6.30, 20.955, 44.26, 85.27};
  std::vector<double> values;
  for (int i = 0; i < 10000; ++i) values.push_back(u(rng));
  values.insert(values.end(), d.begin(), d.end());
  for (double v : values) CHECK(assign_class(v, d) == scan_class(v, d));
  std::sort(values.begin(), values.end());
  for (std::size_t i = 1; i < values.size(); ++i) CHECK(assign_class(values[i - 1], d) <= assign_class(values[i], d));
}

TEST_CASE("dividers from class means") {
  std::map<int, std::vector<double>> means = {{1, {2.77}}, {2, {9.83}}, {3, {32.08}}, {4, {56.44}}, {5, {114.10}}};
  CHECK(compute_dividers(means) == std::vector<double>{6.30, 20.955, 44.26, 85.27});
  std::map<int, std::vector<double>> ints = {{1, {3}}, {2, {1}}, {3, {5}}, {4, {2}}, {5, {4}}};
  CHECK(compute_dividers(ints) == std::vector<double>{1.5, 2.5, 3.5, 4.5});
  std::map<int, std::vector<double>> three = {{1, {0, 2}}, {2, {10}}, {7, {4, 4}}};
  CHECK(compute_dividers(three) == std::vector<double>{2.5, 7.0});
}

TEST_CASE("dividers match a recomputation oracle") {
  // Multiples of 1/64 below 2^20 sum exactly, so any summation order agrees bit for bit.
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> tick(0, 64 * 1000);
  std::uniform_int_distribution<int> count(1, 40);
  for (int trial = 0; trial < 50; ++trial) {
    std::map<int, std::vector<double>> data;
    for (int c = 1; c <= 5; ++c) {
      const int n = count(rng);
      for (int i = 0; i < n; ++i) data[c].push_back(tick(rng) / 64.0);
    }
    std::vector<double> means;
    for (const auto& [c, v] : data) {
      double s = 0;
      for (double x : v) s += x;
      means.push_back(s / v.size());
    }
    std::sort(means.begin(), means.end());
    if (std::adjacent_find(means.begin(), means.end()) != means.end()) continue;
    std::vector<double> expected;
    for (std::size_t i = 0; i + 1 < means.size(); ++i) expected.push_back((means[i] + means[i + 1]) / 2);
    CHECK(compute_dividers(data) == expected);
  }
}

TEST_CASE("dividers ignore the order of values within a class") {
  std::mt19937_64 rng(8);
  std::lognormal_distribution<double> v(1.0, 2.0);
  std::map<int, std::vector<double>> data;
  for (int c = 1; c <= 5; ++c) {
    for (int i = 0; i < 100; ++i) data[c].push_back(v(rng) * c);
  }
  const auto reference = compute_dividers(data);
  for (int trial = 0; trial < 10; ++trial) {
    for (auto& [c, values] : data) std::shuffle(values.begin(), values.end(), rng);
    CHECK(compute_dividers(data) == reference);
  }
}

TEST_CASE("divider errors") {
  CHECK_THROWS_AS(compute_dividers({{1, {1.0}}, {2, {}}}), UsageError);
  CHECK_THROWS_AS(compute_dividers({{1, {1.0, 3.0}}, {2, {2.0}}}), UsageError);
  CHECK_THROWS_AS(compute_dividers({{1, {1.0}}}), UsageError);
  CHECK_THROWS_AS((DividerSet{{1, 1}, {1, 2}}.validate()), UsageError);
  CHECK_THROWS_AS((DividerSet{{}, {1, 2}}.validate()), UsageError);
  CHECK_NOTHROW((DividerSet{{1, 2, 3, 4}, {0.5, 9}}.validate()));
}

TEST_CASE("divider json") {
  const DividerSet d{{21.15, 164.02, 568.82, 2890.56}, {1, 50, 100, 150}};
  CHECK(dividers_from_json(to_json(d)) == d);
  CHECK_THROWS(dividers_from_json(nlohmann::json{{"bw", {1, 2}}}));
}

TEST_CASE("label sets") {
  const auto flows = class_flows(5, 30);
  const DividerSet d = dividers_from_flows(flows, std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});

  SUBCASE("no labels keeps bandwidth and duration") {
    const auto labels = build_label_set(flows, d, 0, 1);
    for (std::size_t i = 0; i < flows.size(); ++i) {
      CHECK(labels[i].traffic_mask == 0);
      CHECK(!labels[i].y_traffic);
      CHECK(labels[i].y_bw == assign_class(flows[i].bandwidth, d.bw));
      CHECK(labels[i].y_dur == assign_class(flows[i].duration, d.dur));
    }
  }
  SUBCASE("exact per-class counts") {
    const auto labels = build_label_set(flows, d, 20, 1);
    std::map<int, int> per_class;
    for (std::size_t i = 0; i < flows.size(); ++i) {
      CHECK((labels[i].traffic_mask == 1) == labels[i].y_traffic.has_value());
      if (labels[i].traffic_mask) {
        CHECK(*labels[i].y_traffic == *flows[i].traffic_label);
        ++per_class[*labels[i].y_traffic];
      }
    }
    CHECK(per_class == std::map<int, int>{{1, 20}, {2, 20}, {3, 20}, {4, 20}, {5, 20}});
  }
  SUBCASE("seeded sampling") {
    CHECK(build_label_set(flows, d, 7, 3) == build_label_set(flows, d, 7, 3));
    CHECK(build_label_set(flows, d, 7, 3) != build_label_set(flows, d, 7, 4));
  }
  SUBCASE("sampling stays inside the candidates") {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < flows.size(); i += 2) candidates.push_back(i);
    for (std::size_t i : sample_labeled(flows, candidates, 2, 9)) CHECK(i % 2 == 0);
  }
  SUBCASE("too few flows names the class") {
    auto short_flows = flows;
    short_flows.push_back(labeled_flow(6, 1000, 1000));
    try {
      build_label_set(short_flows, d, 2, 1);
      FAIL("expected an error");
    } catch (const UsageError& e) {
      CHECK(std::string(e.what()).find("class 6") != std::string::npos);
    }
  }
}
