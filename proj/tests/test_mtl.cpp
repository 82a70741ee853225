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

#include <cmath>
#include <random>
#include <set>

#include "mtltc/baselines.hpp"
#include "mtltc/mtl.hpp"
#include "mtltc/nn/checkpoint.hpp"
#include "mtltc/synthetic.hpp"

using namespace mtltc;

namespace {

nn::Batch<double> random_input(int batch, int k, std::mt19937_64& rng) {
  nn::Batch<double> b;
  b.batch = batch;
  b.length = k;
  b.data.resize(batch * k, 2);
  std::uniform_real_distribution<double> iat(0, 1), len(-1, 1);
  for (nn::Index r = 0; r < b.data.rows(); ++r) {
    b.data(r, 0) = iat(rng);
    b.data(r, 1) = len(rng);
  }
  return b;
}

std::vector<TaskLabels> random_labels(int n, double labeled_share, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> cls(1, 5);
  std::bernoulli_distribution labeled(labeled_share);
  std::vector<TaskLabels> out(static_cast<std::size_t>(n));
  for (auto& l : out) {
    l.y_bw = cls(rng);
    l.y_dur = cls(rng);
    if (labeled(rng)) {
      l.y_traffic = cls(rng);
      l.traffic_mask = 1;
    }
  }
  return out;
}

// 40 flows per class from the default generator, features at k = 12, 10 labels per class.
LabeledDataset small_dataset(int per_class = 40, int labeled = 10, std::uint64_t seed = 3) {
  const auto flows = segment_flows(generate_synthetic(default_synthetic_spec(5, per_class), seed), kDefaultUdpTimeout);
  std::vector<std::size_t> all(flows.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const DividerSet d = dividers_from_flows(flows, all);
  LabeledDataset data;
  for (const auto& f : flows) data.features.push_back(extract_features(f, 12));
  data.labels = build_label_set(flows, d, labeled, seed);
  return data;
}

std::vector<nn::Matrix<float>> values_of(const std::vector<nn::Param<float>*>& params) {
  std::vector<nn::Matrix<float>> out;
  for (const auto* p : params) out.push_back(p->value);
  return out;
}

}  // namespace

TEST_CASE("fresh networks predict near-uniform distributions") {
  std::mt19937_64 rng(1);
  nn::Network<double> net(flow_cnn_architecture(60, {5, 5, 5}), 11);
  const auto probs = net.forward(random_input(100, 60, rng));
  for (const auto& logits : probs) {
    const nn::Matrix<double> p = nn::softmax_rows(logits);
    for (nn::Index i = 0; i < p.rows(); ++i) {
      CHECK(std::abs(p.row(i).sum() - 1.0) < 1e-12);
      const double entropy = -(p.row(i).array() * p.row(i).array().log()).sum();
      CHECK(entropy >= 0.95 * std::log(5.0));
    }
  }
}

TEST_CASE("heads read one shared trunk pass") {
  std::mt19937_64 rng(2);
  nn::Network<double> net(tiny_architecture(12, {5, 5, 5}), 3);
  const auto x = random_input(4, 12, rng);
  const auto features = net.trunk_forward(x);
  const auto logits = net.forward(x);
  for (std::size_t h = 0; h < 3; ++h) {
    const nn::Matrix<double> expected =
        (features.data * net.head(h).weight().value).rowwise() + net.head(h).bias().value.row(0);
    CHECK((logits[h] - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("masked loss") {
  std::mt19937_64 rng(4);
  nn::Network<double> net(tiny_architecture(12, {5, 5, 5}), 5);
  const auto x = random_input(16, 12, rng);
  auto labels = random_labels(16, 0.4, rng);

  SUBCASE("all unlabeled") {
    for (auto& l : labels) {
      l.traffic_mask = 0;
      l.y_traffic.reset();
    }
    const auto loss = masked_mtl_loss(net, x, std::span(labels), MtlLossConfig{3.0});
    CHECK(loss.total == loss.bw + loss.dur);
    CHECK(loss.traffic == 0.0);
    CHECK((net.head(kTrafficHead).weight().grad.array() == 0.0).all());
    CHECK((net.head(kTrafficHead).bias().grad.array() == 0.0).all());
  }
  SUBCASE("linear in lambda") {
    const auto one = masked_mtl_loss(net, x, std::span(labels), MtlLossConfig{1.0});
    const auto two = masked_mtl_loss(net, x, std::span(labels), MtlLossConfig{2.0});
    CHECK(two.traffic_term == 2 * one.traffic_term);
    CHECK(std::abs((two.total - two.bw - two.dur) - 2 * (one.total - one.bw - one.dur)) < 1e-12 * one.total);
    for (double lambda : {0.0, 0.25, 7.0, 100.0}) {
      const auto l = masked_mtl_loss(net, x, std::span(labels), MtlLossConfig{lambda});
      CHECK(std::abs(l.traffic_term - lambda * one.traffic_term) <= 1e-10 * std::max(1.0, lambda));
      CHECK(std::abs(l.total - (l.bw + l.dur + lambda * l.traffic)) <= 1e-10);
    }
  }
  SUBCASE("matches an independent per-sample sum") {
    const double lambda = 2.5;
    const auto loss = masked_mtl_loss(net, x, std::span(labels), MtlLossConfig{lambda});
    const auto logits = net.forward(x);
    auto xent = [](const nn::Matrix<double>& z, nn::Index row, int target) {
      long double top = z.row(row).maxCoeff(), sum = 0;
      for (nn::Index c = 0; c < z.cols(); ++c) sum += std::exp(static_cast<long double>(z(row, c)) - top);
      return static_cast<double>(std::log(sum) + top - z(row, target));
    };
    double bw = 0, dur = 0, traffic = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto r = static_cast<nn::Index>(i);
      bw += xent(logits[0], r, labels[i].y_bw - 1);
      dur += xent(logits[1], r, labels[i].y_dur - 1);
      traffic += labels[i].traffic_mask * (labels[i].traffic_mask ? xent(logits[2], r, *labels[i].y_traffic - 1) : 0.0);
    }
    CHECK(std::abs(loss.bw - bw) < 1e-12 * std::max(1.0, bw));
    CHECK(std::abs(loss.dur - dur) < 1e-12 * std::max(1.0, dur));
    CHECK(std::abs(loss.traffic - traffic) < 1e-12 * std::max(1.0, traffic));
    CHECK(std::abs(loss.total - (bw + dur + lambda * traffic)) < 1e-12 * std::max(1.0, loss.total));
  }
  SUBCASE("trunk gradient is the sum of per-task gradients") {
    const double lambda = 1.5;
    const auto full = mtl_targets<double>(std::span<const TaskLabels>(labels), lambda);
    net.loss_and_gradient(x, full);
    std::vector<nn::Matrix<double>> total;
    for (auto* p : net.trunk_params()) total.push_back(p->grad);
    std::vector<nn::Matrix<double>> sum;
    for (auto* p : net.trunk_params()) sum.push_back(nn::Matrix<double>::Zero(p->grad.rows(), p->grad.cols()));
    for (std::size_t only = 0; only < 3; ++only) {
      auto t = full;
      for (std::size_t h = 0; h < 3; ++h) {
        if (h != only) std::fill(t[h].weights.begin(), t[h].weights.end(), 0.0);
      }
      net.loss_and_gradient(x, t);
      const auto params = net.trunk_params();
      for (std::size_t i = 0; i < params.size(); ++i) sum[i] += params[i]->grad;
    }
    for (std::size_t i = 0; i < sum.size(); ++i) {
      CHECK((sum[i] - total[i]).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, total[i].cwiseAbs().maxCoeff()));
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(masked_mtl_loss(net, x, std::span(labels), MtlLossConfig{-1.0}), UsageError);
    CHECK_THROWS_AS(masked_mtl_loss(net, x, std::span(labels).first(3), MtlLossConfig{1.0}), ShapeError);
    nn::Batch<double> empty;
    CHECK_THROWS_AS(masked_mtl_loss(net, empty, std::span<const TaskLabels>(), MtlLossConfig{1.0}), UsageError);
  }
}

TEST_CASE("training") {
  const LabeledDataset data = small_dataset();
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 32;
  cfg.seed = 5;

  SUBCASE("all task losses drop") {
    nn::Network<float> net(tiny_architecture(12, {5, 5, 5}), 1);
    const auto h = train_mtl(net, data, cfg);
    REQUIRE(h.epochs.size() == 30);
    for (std::size_t t = 0; t < 3; ++t) CHECK(h.epochs.back().heads[t] < h.epochs.front().heads[t]);
  }
  SUBCASE("lambda zero never moves the traffic head") {
    nn::Network<float> net(tiny_architecture(12, {5, 5, 5}), 1);
    const auto before = values_of(net.head_params(kTrafficHead));
    const auto trunk_before = values_of(net.trunk_params());
    cfg.lambda = 0.0;
    cfg.epochs = 5;
    train_mtl(net, data, cfg);
    CHECK(values_of(net.head_params(kTrafficHead)) == before);
    CHECK(values_of(net.trunk_params()) != trunk_before);
  }
  SUBCASE("same seed, same parameters") {
    cfg.epochs = 3;
    nn::Network<float> a(tiny_architecture(12, {5, 5, 5}), 1), b(tiny_architecture(12, {5, 5, 5}), 1);
    train_mtl(a, data, cfg);
    train_mtl(b, data, cfg);
    CHECK(values_of(a.params()) == values_of(b.params()));
    cfg.seed = 6;
    nn::Network<float> c(tiny_architecture(12, {5, 5, 5}), 1);
    train_mtl(c, data, cfg);
    CHECK(values_of(a.params()) != values_of(c.params()));
  }
  SUBCASE("early stopping") {
    cfg.patience = 1;
    cfg.min_delta = 1e9;
    nn::Network<float> net(tiny_architecture(12, {5, 5, 5}), 1);
    CHECK(train_mtl(net, data, cfg).epochs.size() == 2);
  }
  SUBCASE("divergence names the epoch") {
    cfg.adam.learning_rate = 1e30;
    cfg.epochs = 5;
    nn::Network<float> net(tiny_architecture(12, {5, 5, 5}), 1);
    CHECK_THROWS_WITH_AS(train_mtl(net, data, cfg), doctest::Contains("epoch"), NumericalError);
  }
}

TEST_CASE("prediction") {
  Eigen::RowVectorXd p(5);
  p << 0.1, 0.6, 0.1, 0.1, 0.1;
  CHECK(argmax_class(p) == 2);
  CHECK(argmax_class(Eigen::RowVectorXd((p.array() * 3 - 7).exp())) == 2);

  const LabeledDataset data = small_dataset(10, 2);
  nn::Network<float> net(tiny_architecture(12, {5, 5, 5}), 8);
  TrainConfig cfg;
  cfg.epochs = 2;
  train_mtl(net, data, cfg);
  const auto before = predict(net, data.features);
  auto reloaded = nn::network_from_checkpoint<float>(nlohmann::json::parse(nn::checkpoint_to_json(net).dump()));
  const auto after = predict(reloaded, data.features);
  REQUIRE(before.size() == after.size());
  const auto logits = net.forward(stack_features<float>(data.features));
  for (std::size_t i = 0; i < before.size(); ++i) {
    CHECK(before[i].traffic_class == after[i].traffic_class);
    CHECK(before[i].bw_class == after[i].bw_class);
    CHECK(before[i].p_traffic_max == after[i].p_traffic_max);
    nn::Index best = 0;
    logits[2].row(static_cast<nn::Index>(i)).maxCoeff(&best);
    CHECK(before[i].traffic_class == best + 1);
  }
}

TEST_CASE("joint labels are a bijection") {
  std::set<int> seen;
  for (int b = 1; b <= 5; ++b) {
    for (int d = 1; d <= 5; ++d) {
      const int id = joint_label(b, d, 5);
      CHECK(id >= 0);
      CHECK(id < 25);
      seen.insert(id);
      CHECK(split_joint_label(id, 5).y_bw == b);
      CHECK(split_joint_label(id, 5).y_dur == d);
    }
  }
  CHECK(seen.size() == 25);
}

TEST_CASE("transfer fine-tuning starts from the stage-1 trunk") {
  const LabeledDataset data = small_dataset(20, 4);
  TransferConfig cfg;
  cfg.stage1.epochs = 3;
  cfg.stage1.seed = 2;
  cfg.stage2.epochs = 0;
  cfg.head_seed = 9;

  nn::Network<float> net(tiny_architecture(12, {25}), 4);
  train_transfer(net, data, cfg);

  nn::Network<float> reference(tiny_architecture(12, {25}), 4);
  nn::HeadTargets<float> joint;
  for (const auto& l : data.labels) {
    joint.targets.push_back(joint_label(l.y_bw, l.y_dur, 5));
    joint.weights.push_back(1.0f);
  }
  train_network(reference, data.features, {joint}, cfg.stage1);
  CHECK(values_of(net.trunk_params()) == values_of(reference.trunk_params()));
  CHECK(net.spec().heads[0] == 5);

  nn::Network<float> wrong(tiny_architecture(12, {5}), 4);
  CHECK_THROWS_AS(train_transfer(wrong, data, cfg), ShapeError);
}

TEST_CASE("single-task traffic loss is the masked loss without bandwidth and duration") {
  std::mt19937_64 rng(12);
  const auto x = random_input(10, 12, rng);
  const auto labels = random_labels(10, 0.5, rng);
  nn::Network<double> mtl(tiny_architecture(12, {5, 5, 5}), 6);
  const auto full = masked_mtl_loss(mtl, x, std::span(labels), MtlLossConfig{1.0});

  // Same trunk, only the traffic head.
  auto spec = mtl.spec();
  spec.heads = {5};
  nn::Network<double> single(spec, 0);
  auto src = mtl.trunk_params();
  auto dst = single.trunk_params();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i]->value = src[i]->value;
  single.head_params(0)[0]->value = mtl.head(kTrafficHead).weight().value;
  single.head_params(0)[1]->value = mtl.head(kTrafficHead).bias().value;

  LabeledDataset ds;
  ds.labels = labels;
  ds.features.resize(labels.size());
  const auto loss = single.loss_and_gradient(x, {task_targets<double>(ds, Task::kTraffic)});
  CHECK(std::abs(loss[0] - (full.total - full.bw - full.dur)) < 1e-12);
}

TEST_CASE("single-task training picks its samples") {
  LabeledDataset data = small_dataset(20, 3);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 1000;
  nn::Network<float> bw(tiny_architecture(12, {5}), 1);
  // One batch of everything: the reported per-sample loss is averaged over all samples.
  const auto h = train_single_task(bw, data, Task::kBandwidth, cfg);
  CHECK(task_targets<float>(data, Task::kBandwidth).weights.size() == data.size());
  CHECK(h.epochs.size() == 1);

  auto unlabeled = data;
  for (auto& l : unlabeled.labels) {
    l.traffic_mask = 0;
    l.y_traffic.reset();
  }
  nn::Network<float> traffic(tiny_architecture(12, {5}), 1);
  CHECK_THROWS_AS(train_single_task(traffic, unlabeled, Task::kTraffic, cfg), UsageError);
  nn::Network<float> two(tiny_architecture(12, {5, 5}), 1);
  CHECK_THROWS_AS(train_single_task(two, data, Task::kBandwidth, cfg), ShapeError);
  CHECK(task_from_string(to_string(Task::kDuration)) == Task::kDuration);
}
