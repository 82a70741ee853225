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
#include <map>
#include <set>
#include <sstream>

#include "mtltc/experiment.hpp"
#include "mtltc/synthetic.hpp"

using namespace mtltc;

namespace {

const std::vector<FlowSample>& small_flows() {
  static const std::vector<FlowSample> flows =
      segment_flows(generate_synthetic(default_synthetic_spec(5, 30), 17), kDefaultUdpTimeout);
  return flows;
}

ExperimentConfig quick_config(Regime regime = Regime::kMtl) {
  ExperimentConfig c;
  c.regime = regime;
  c.labeled_per_class = 4;
  c.epochs = 2;
  c.batch_size = 32;
  c.seeds = {7, 8};
  return c;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream s(line);
  std::string field;
  while (std::getline(s, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

TEST_CASE("splits are stratified, disjoint and complete") {
  const auto& flows = small_flows();
  const Split s = split_flows(flows, 0.8, 3);
  std::set<std::size_t> train(s.train.begin(), s.train.end()), test(s.test.begin(), s.test.end());
  CHECK(train.size() == s.train.size());
  for (std::size_t i : test) CHECK(train.count(i) == 0);
  CHECK(train.size() + test.size() == flows.size());
  std::map<int, int> per_class;
  for (std::size_t i : s.train) ++per_class[*flows[i].traffic_label];
  for (const auto& [label, n] : per_class) CHECK(n == 24);
  CHECK(split_flows(flows, 0.8, 3).train == s.train);
  CHECK(split_flows(flows, 0.8, 4).train != s.train);
  CHECK_THROWS_AS(split_flows(flows, 1.0, 3), UsageError);
}

TEST_CASE("seed streams differ") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t seed : {1u, 2u}) {
    for (std::uint64_t stream = 0; stream < 7; ++stream) seen.insert(derive_seed(seed, stream));
  }
  CHECK(seen.size() == 14);
  CHECK(derive_seed(5, 2) == derive_seed(5, 2));
}

TEST_CASE("prepared runs") {
  const auto& flows = small_flows();
  const auto c = quick_config();
  const PreparedRun run = prepare_run(flows, c, 7);
  std::set<std::size_t> train(run.split.train.begin(), run.split.train.end());
  std::map<int, int> per_class;
  for (std::size_t i : run.labeled) {
    CHECK(train.count(i) == 1);
    ++per_class[*flows[i].traffic_label];
  }
  CHECK(per_class.size() == 5);
  for (const auto& [label, n] : per_class) CHECK(n == 4);
  CHECK(run.train.labeled_count() == 20);
  CHECK(run.test.labeled_count() == run.test.size());
  CHECK(run.dividers == dividers_from_flows(flows, run.labeled));
  CHECK(run.divider_source == "bw:labeled,dur:labeled");

  SUBCASE("regimes share data") {
    const PreparedRun other = prepare_run(flows, quick_config(Regime::kTransfer), 7);
    CHECK(fingerprint(other.train) == fingerprint(run.train));
    CHECK(fingerprint(other.test) == fingerprint(run.test));
  }
  SUBCASE("full-train dividers") {
    auto full = c;
    full.divider_mode = DividerMode::kFull;
    CHECK(prepare_run(flows, full, 7).dividers == dividers_from_flows(flows, run.split.train));
  }
  SUBCASE("explicit duration dividers only") {
    auto mixed = c;
    mixed.explicit_dur = std::vector<double>{1, 50, 100, 150};
    const PreparedRun m = prepare_run(flows, mixed, 7);
    CHECK(m.dividers.bw == run.dividers.bw);
    CHECK(m.dividers.dur == std::vector<double>{1, 50, 100, 150});
    CHECK(m.divider_source == "bw:labeled,dur:explicit");
  }
  SUBCASE("lambda ratio preset") {
    auto ratio = c;
    ratio.lambda_ratio = true;
    const PreparedRun r = prepare_run(flows, ratio, 7);
    CHECK(r.lambda == static_cast<double>(r.train.size() - 20) / 20.0);
  }
  SUBCASE("invalid configs fail before training") {
    auto bad = c;
    bad.k = 30;
    bad.trunk = TrunkVariant::kFull;
    CHECK_THROWS_AS(prepare_run(flows, bad, 7), ShapeError);
    bad = c;
    bad.labeled_per_class = 25;
    CHECK_THROWS_AS(prepare_run(flows, bad, 7), UsageError);
    bad = c;
    bad.seeds.clear();
    CHECK_THROWS_AS(bad.validate(), UsageError);
  }
}

TEST_CASE("harness accuracy matches a recount of the prediction csv") {
  const auto& flows = small_flows();
  for (Regime regime : {Regime::kMtl, Regime::kSingle, Regime::kTransfer}) {
    auto c = quick_config(regime);
    c.single_all_tasks = true;
    const PreparedRun run = prepare_run(flows, c, 7);
    TrainedRun trained = train_run(run, c);
    const auto eval = evaluate_run(trained, run.test);

    std::stringstream csv;
    write_predictions_csv(csv, run.split.test, trained, run.test.features);
    std::string line;
    std::getline(csv, line);
    CHECK(line == "flow_id,bw_class,dur_class,traffic_class,p_traffic_max");
    std::size_t rows = 0, hits = 0;
    while (std::getline(csv, line)) {
      const auto f = split_csv(line);
      REQUIRE(f.size() == 5);
      const std::size_t id = std::stoul(f[0]);
      CHECK(id == run.split.test[rows]);
      if (std::stoi(f[3]) == *flows[id].traffic_label) ++hits;
      ++rows;
    }
    CHECK(rows == run.test.size());
    CHECK(eval.at("traffic").accuracy == static_cast<double>(hits) / static_cast<double>(rows));

    long total = 0;
    for (const auto& row : eval.at("traffic").confusion) {
      for (long v : row) total += v;
    }
    CHECK(total == static_cast<long>(rows));
  }
}

TEST_CASE("experiment reports") {
  const auto& flows = small_flows();
  const auto c = quick_config();
  const MetricsReport a = run_experiment(flows, c);
  const MetricsReport b = run_experiment(flows, c);
  CHECK(to_json(a).dump() == to_json(b).dump());
  REQUIRE(a.seeds.size() == 2);
  for (const auto& [task, s] : a.summary) {
    CHECK(s.min <= s.mean);
    CHECK(s.mean <= s.max);
    CHECK(s.min >= 0.0);
    CHECK(s.max <= 1.0);
  }
  CHECK(a.summary.count("bw") == 1);
  CHECK(a.summary.count("dur") == 1);

  // Confusion rows sum to the per-class test counts.
  std::map<int, long> test_counts;
  for (std::size_t i : prepare_run(flows, c, 7).split.test) ++test_counts[*flows[i].traffic_label];
  const auto& conf = a.seeds[0].confusion.at("traffic");
  for (int label = 1; label <= 5; ++label) {
    long sum = 0;
    for (long v : conf[static_cast<std::size_t>(label - 1)]) sum += v;
    CHECK(sum == test_counts[label]);
  }
}

TEST_CASE("sweeps") {
  const auto& flows = small_flows();
  auto base = quick_config();
  base.seeds = {7};

  const auto cells = sweep(flows, base, SweepAxis::kLambda, {"1", "ratio", "oops"});
  REQUIRE(cells.size() == 3);
  CHECK(to_json(cells[0].report).dump() == to_json(run_experiment(flows, base)).dump());
  CHECK(cells[1].report.ok());
  CHECK(cells[1].report.seeds[0].lambda > 1.0);
  CHECK(!cells[2].report.ok());

  std::stringstream csv;
  write_sweep_csv(csv, SweepAxis::kLambda, cells);
  std::string line;
  std::getline(csv, line);
  CHECK(line == "axis,value,seed,task,accuracy,regime,k,lambda,labels_per_class");
  int error_rows = 0, data_rows = 0;
  while (std::getline(csv, line)) {
    const auto f = split_csv(line);
    REQUIRE(f.size() == 9);
    CHECK(f[0] == "lambda");
    if (f[3] == "error") {
      ++error_rows;
      CHECK(f[4] == "nan");
    } else {
      ++data_rows;
    }
  }
  CHECK(error_rows == 1);
  CHECK(data_rows == 6);

  SUBCASE("axis parsing") {
    CHECK(apply_axis(base, SweepAxis::kLabels, "10").labeled_per_class == 10);
    CHECK(apply_axis(base, SweepAxis::kK, "45").k == 45);
    CHECK_THROWS_AS(apply_axis(base, SweepAxis::kK, "4x"), UsageError);
    const auto d = apply_axis(base, SweepAxis::kDividers, R"({"bw": [21.15, 164.02, 568.82, 2890.56], "dur": [1, 50, 100, 150]})");
    CHECK(d.explicit_bw == std::vector<double>{21.15, 164.02, 568.82, 2890.56});
    CHECK(d.explicit_dur == std::vector<double>{1, 50, 100, 150});
    CHECK(apply_axis(d, SweepAxis::kDividers, "full").divider_mode == DividerMode::kFull);
    CHECK(!apply_axis(d, SweepAxis::kDividers, "full").explicit_bw);
    CHECK_THROWS_AS(apply_axis(base, SweepAxis::kDividers, R"({"dur": [5, 1]})"), UsageError);
    CHECK(sweep_axis_from_string("labels") == SweepAxis::kLabels);
  }
}

TEST_CASE("config json round trip") {
  auto c = quick_config(Regime::kTransfer);
  c.explicit_dur = std::vector<double>{1, 50, 100, 150};
  c.lambda = 5;
  c.stage2_epochs = 4;
  const auto j = to_json(c);
  CHECK(to_json(experiment_config_from_json(j)).dump() == j.dump());
  CHECK(experiment_config_from_json({{"k", 45}}).k == 45);
  CHECK_THROWS(experiment_config_from_json({{"regime", "bogus"}}));
}

TEST_CASE("run checkpoints restore identical predictions") {
  const auto& flows = small_flows();
  for (Regime regime : {Regime::kMtl, Regime::kTransfer}) {
    const auto c = quick_config(regime);
    const PreparedRun run = prepare_run(flows, c, 8);
    TrainedRun trained = train_run(run, c);
    const auto j = run_to_checkpoint(trained, c, run);
    LoadedRun loaded = run_from_checkpoint(nlohmann::json::parse(j.dump()));
    CHECK(loaded.seed == 8);
    CHECK(loaded.dividers == run.dividers);
    CHECK(loaded.trained.regime == regime);
    std::stringstream x, y;
    write_predictions_csv(x, run.split.test, trained, run.test.features);
    write_predictions_csv(y, run.split.test, loaded.trained, run.test.features);
    CHECK(x.str() == y.str());
    CHECK(run_to_checkpoint(loaded.trained, loaded.config, run).dump() == j.dump());
  }
}

TEST_CASE("synthetic generator") {
  const SyntheticSpec spec = default_synthetic_spec(5, 100);
  const auto packets = generate_synthetic(spec, 4);
  CHECK(std::is_sorted(packets.begin(), packets.end(),
                       [](const PacketRecord& a, const PacketRecord& b) { return a.timestamp < b.timestamp; }));
  const auto flows = segment_flows(packets, kDefaultUdpTimeout);
  REQUIRE(flows.size() == 500);
  std::map<int, std::vector<double>> durations, bandwidths;
  for (const auto& f : flows) {
    durations[*f.traffic_label].push_back(f.duration);
    bandwidths[*f.traffic_label].push_back(f.bandwidth);
  }
  for (const auto& g : spec.classes) {
    REQUIRE(durations[g.label].size() == 100);
    const auto& d = durations[g.label];
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
    CHECK(std::abs(mean - g.expected_duration()) <= 0.1 * g.expected_duration());
    for (const auto& f : flows) {
      if (*f.traffic_label == g.label) {
        CHECK(f.packet_count() >= static_cast<std::size_t>(g.min_packets));
        CHECK(f.packet_count() <= static_cast<std::size_t>(g.max_packets));
      }
    }
  }
  const auto bw = compute_dividers(bandwidths), dur = compute_dividers(durations);
  CHECK(bw.size() == 4);
  CHECK(std::adjacent_find(bw.begin(), bw.end(), std::greater_equal<>()) == bw.end());
  CHECK(std::adjacent_find(dur.begin(), dur.end(), std::greater_equal<>()) == dur.end());

  CHECK(generate_synthetic(spec, 4).size() == packets.size());
  CHECK(flows_fingerprint(segment_flows(generate_synthetic(spec, 4), 15.0)) == flows_fingerprint(flows));
  CHECK(default_synthetic_spec(8, 10).classes.size() == 8);
  CHECK_NOTHROW(default_synthetic_spec(8, 10).validate());

  SUBCASE("spec json") {
    const auto back = synthetic_spec_from_json(to_json(spec));
    CHECK(to_json(back).dump() == to_json(spec).dump());
  }
  SUBCASE("degenerate specs are rejected") {
    SyntheticSpec twin = spec;
    twin.classes[1] = twin.classes[0];
    twin.classes[1].label = 2;
    CHECK_THROWS_AS(twin.validate(), UsageError);
    CHECK_THROWS_AS(default_synthetic_spec(1, 10), UsageError);
  }
}

TEST_CASE("tcp synthetic flows end at their fin") {
  SyntheticSpec spec = default_synthetic_spec(2, 20);
  for (auto& g : spec.classes) g.protocol = Protocol::kTcp;
  const auto packets = generate_synthetic(spec, 9);
  CHECK(std::count_if(packets.begin(), packets.end(), [](const PacketRecord& p) { return p.tcp_fin; }) == 40);
  CHECK(segment_flows(packets, kDefaultUdpTimeout).size() == 40);
}
