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


#include "mtltc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "mtltc/error.hpp"
#include "mtltc/fingerprint.hpp"

namespace mtltc {

namespace {

template <typename Enum, std::size_t N>
const char* enum_name(Enum v, const std::pair<Enum, const char*> (&table)[N]) {
  for (const auto& [e, name] : table) {
    if (e == v) return name;
  }
  return "unknown";
}

template <typename Enum, std::size_t N>
Enum enum_value(const std::string& s, const std::pair<Enum, const char*> (&table)[N], const char* what) {
  for (const auto& [e, name] : table) {
    if (s == name) return e;
  }
  std::string options;
  for (const auto& [e, name] : table) options += std::string(options.empty() ? "" : ", ") + name;
  throw UsageError(std::string("unknown ") + what + " '" + s + "' (expected " + options + ")");
}

const std::pair<Regime, const char*> kRegimes[] = {
    {Regime::kMtl, "mtl"}, {Regime::kSingle, "single"}, {Regime::kTransfer, "transfer"}};
const std::pair<DividerMode, const char*> kDividerModes[] = {{DividerMode::kLabeled, "labeled"},
                                                            {DividerMode::kFull, "full"}};
const std::pair<SweepAxis, const char*> kAxes[] = {{SweepAxis::kNone, "none"},
                                                   {SweepAxis::kLabels, "labels"},
                                                   {SweepAxis::kK, "k"},
                                                   {SweepAxis::kLambda, "lambda"},
                                                   {SweepAxis::kDividers, "dividers"}};
const std::pair<TrunkVariant, const char*> kTrunks[] = {
    {TrunkVariant::kAuto, "auto"}, {TrunkVariant::kFull, "full"}, {TrunkVariant::kReduced, "reduced"}};

enum SeedStream : std::uint64_t { kSplitStream = 1, kLabelStream, kInitStream, kShuffleStream, kHeadStream,
                                  kBwInitStream, kDurInitStream };

constexpr const char* kTaskBw = "bw";
constexpr const char* kTaskDur = "dur";
constexpr const char* kTaskTraffic = "traffic";

}  // namespace

namespace {

void apply_dividers_json(ExperimentConfig& c, const nlohmann::json& v) {
  c.explicit_bw.reset();
  c.explicit_dur.reset();
  if (v.is_string()) {
    c.divider_mode = enum_value(v.get<std::string>(), kDividerModes, "divider mode");
    return;
  }
  if (!v.is_object()) throw DataFormatError("config: dividers must be a mode name or an object");
  if (v.contains("source")) c.divider_mode = enum_value(v.at("source").get<std::string>(), kDividerModes, "divider mode");
  if (v.contains("bw")) c.explicit_bw = v.at("bw").get<std::vector<double>>();
  if (v.contains("dur")) c.explicit_dur = v.at("dur").get<std::vector<double>>();
}

}  // namespace

const char* to_string(Regime r) { return enum_name(r, kRegimes); }
Regime regime_from_string(const std::string& s) { return enum_value(s, kRegimes, "regime"); }
const char* to_string(DividerMode m) { return enum_name(m, kDividerModes); }
DividerMode divider_mode_from_string(const std::string& s) { return enum_value(s, kDividerModes, "divider mode"); }
const char* to_string(SweepAxis a) { return enum_name(a, kAxes); }
SweepAxis sweep_axis_from_string(const std::string& s) { return enum_value(s, kAxes, "sweep axis"); }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw UsageError("config: seeds must not be empty");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw UsageError("config: train fraction must be in (0, 1)");
  if (labeled_per_class < 0) throw UsageError("config: labels per class must be >= 0");
  if (k < 1) throw UsageError("config: k must be >= 1");
  if (!lambda_ratio) MtlLossConfig{lambda}.validate();
  if (epochs < 0 || batch_size < 1 || patience < 0) throw UsageError("config: invalid epochs/batch/patience");
  if (!(max_len > 0.0) || !(max_iat > 0.0)) throw UsageError("config: normalization maxima must be positive");
  if (explicit_bw || explicit_dur) {
    DividerSet check{explicit_bw.value_or(std::vector<double>{0.0}), explicit_dur.value_or(std::vector<double>{0.0})};
    check.validate();
  }
  const bool derives = !explicit_bw || !explicit_dur;
  if (derives && divider_mode == DividerMode::kLabeled && labeled_per_class == 0) {
    throw UsageError("config: dividers from the labeled subset need labels per class > 0");
  }
  // Architecture rules are checked up front so an unusable k fails before training.
  flow_cnn_architecture(k, {2, 2, 2}, trunk);
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["dataset"] = c.dataset;
  j["regime"] = to_string(c.regime);
  j["labels_per_class"] = c.labeled_per_class;
  j["k"] = c.k;
  j["lambda"] = c.lambda_ratio ? nlohmann::json("ratio") : nlohmann::json(c.lambda);
  if (c.explicit_bw || c.explicit_dur) {
    nlohmann::json d = {{"source", to_string(c.divider_mode)}};
    if (c.explicit_bw) d["bw"] = *c.explicit_bw;
    if (c.explicit_dur) d["dur"] = *c.explicit_dur;
    j["dividers"] = std::move(d);
  } else {
    j["dividers"] = to_string(c.divider_mode);
  }
  j["seeds"] = c.seeds;
  j["train_fraction"] = c.train_fraction;
  j["epochs"] = c.epochs;
  j["stage2_epochs"] = c.stage2_epochs;
  j["batch_size"] = c.batch_size;
  j["patience"] = c.patience;
  j["learning_rate"] = c.adam.learning_rate;
  j["beta1"] = c.adam.beta1;
  j["beta2"] = c.adam.beta2;
  j["epsilon"] = c.adam.epsilon;
  j["single_all_tasks"] = c.single_all_tasks;
  j["max_len"] = c.max_len;
  j["max_iat"] = c.max_iat;
  j["trunk"] = enum_name(c.trunk, kTrunks);
  return j;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j, ExperimentConfig c) {
  if (!j.is_object()) throw DataFormatError("config: expected a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "dataset") c.dataset = v.get<std::string>();
      else if (key == "regime") c.regime = regime_from_string(v.get<std::string>());
      else if (key == "labels_per_class") c.labeled_per_class = v.get<int>();
      else if (key == "k") c.k = v.get<int>();
      else if (key == "lambda") {
        if (v.is_string()) {
          if (v.get<std::string>() != "ratio") throw UsageError("config: lambda must be a number or \"ratio\"");
          c.lambda_ratio = true;
        } else {
          c.lambda = v.get<double>();
          c.lambda_ratio = false;
        }
      } else if (key == "dividers") {
        apply_dividers_json(c, v);
      } else if (key == "seeds") c.seeds = v.get<std::vector<std::uint64_t>>();
      else if (key == "train_fraction") c.train_fraction = v.get<double>();
      else if (key == "epochs") c.epochs = v.get<int>();
      else if (key == "stage2_epochs") c.stage2_epochs = v.get<int>();
      else if (key == "batch_size") c.batch_size = v.get<int>();
      else if (key == "patience") c.patience = v.get<int>();
      else if (key == "learning_rate") c.adam.learning_rate = v.get<double>();
      else if (key == "beta1") c.adam.beta1 = v.get<double>();
      else if (key == "beta2") c.adam.beta2 = v.get<double>();
      else if (key == "epsilon") c.adam.epsilon = v.get<double>();
      else if (key == "single_all_tasks") c.single_all_tasks = v.get<bool>();
      else if (key == "max_len") c.max_len = v.get<double>();
      else if (key == "max_iat") c.max_iat = v.get<double>();
      else if (key == "trunk") c.trunk = enum_value(v.get<std::string>(), kTrunks, "trunk variant");
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataFormatError(std::string("config: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Preparation

Split split_flows(const std::vector<FlowSample>& flows, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw UsageError("split: fraction must be in (0, 1)");
  std::map<int, std::vector<std::size_t>> by_class;
  Split s;
  for (std::size_t i = 0; i < flows.size(); ++i) {
    if (flows[i].traffic_label) by_class[*flows[i].traffic_label].push_back(i);
    else s.train.push_back(i);
  }
  std::mt19937_64 rng(seed);
  for (auto& [label, pool] : by_class) {
    std::shuffle(pool.begin(), pool.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(pool.size())));
    s.train.insert(s.train.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.insert(s.test.end(), pool.begin() + static_cast<std::ptrdiff_t>(n_train), pool.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

PreparedRun prepare_run(const std::vector<FlowSample>& flows, const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  if (flows.empty()) throw UsageError("experiment: no flows");
  const std::vector<int> classes = traffic_classes(flows);
  if (classes.size() < 2) throw UsageError("experiment: need flows from at least two traffic classes");

  PreparedRun run;
  run.seed = seed;
  run.split = split_flows(flows, config.train_fraction, derive_seed(seed, kSplitStream));
  run.labeled = sample_labeled(flows, run.split.train, config.labeled_per_class, derive_seed(seed, kLabelStream));

  const std::string derived_from = to_string(config.divider_mode);
  if (!config.explicit_bw || !config.explicit_dur) {
    run.dividers = config.divider_mode == DividerMode::kLabeled ? dividers_from_flows(flows, run.labeled)
                                                                : dividers_from_flows(flows, run.split.train);
  }
  if (config.explicit_bw) run.dividers.bw = *config.explicit_bw;
  if (config.explicit_dur) run.dividers.dur = *config.explicit_dur;
  run.divider_source = std::string("bw:") + (config.explicit_bw ? "explicit" : derived_from) +
                       ",dur:" + (config.explicit_dur ? "explicit" : derived_from);

  const std::size_t n_labeled = run.labeled.size();
  if (config.lambda_ratio) {
    if (n_labeled == 0) throw UsageError("experiment: lambda ratio needs labeled samples");
    run.lambda = static_cast<double>(run.split.train.size() - n_labeled) / static_cast<double>(n_labeled);
  } else {
    run.lambda = config.lambda;
  }

  const std::vector<TaskLabels> labels = make_labels(flows, run.dividers, run.labeled);
  const int n_traffic = classes.back();
  for (LabeledDataset* d : {&run.train, &run.test}) {
    d->n_bw = run.dividers.bw_classes();
    d->n_dur = run.dividers.dur_classes();
    d->n_traffic = n_traffic;
  }
  for (std::size_t i : run.split.train) {
    run.train.features.push_back(extract_features(flows[i], config.k, config.max_len, config.max_iat));
    run.train.labels.push_back(labels[i]);
  }
  for (std::size_t i : run.split.test) {
    run.test.features.push_back(extract_features(flows[i], config.k, config.max_len, config.max_iat));
    TaskLabels l = labels[i];
    l.y_traffic = flows[i].traffic_label;
    l.traffic_mask = 1;
    run.test.labels.push_back(l);
  }
  return run;
}

// ---------------------------------------------------------------------------
// Training and evaluation

namespace {

TrainConfig train_config(const ExperimentConfig& c, double lambda, std::uint64_t seed, int epochs) {
  TrainConfig t;
  t.lambda = lambda;
  t.epochs = epochs;
  t.batch_size = c.batch_size;
  t.seed = seed;
  t.adam = c.adam;
  t.patience = c.patience;
  return t;
}

void append_curve(std::vector<nlohmann::json>& curve, const std::string& stage, const TrainHistory& h,
                  const std::vector<std::string>& head_names) {
  for (std::size_t e = 0; e < h.epochs.size(); ++e) {
    nlohmann::json row = {{"stage", stage}, {"epoch", e + 1}, {"total", h.epochs[e].total}};
    for (std::size_t i = 0; i < head_names.size() && i < h.epochs[e].heads.size(); ++i) {
      row[head_names[i]] = h.epochs[e].heads[i];
    }
    curve.push_back(std::move(row));
  }
}

TaskEvaluation score(const nn::Matrix<ExperimentScalar>& probs, const std::vector<int>& truth) {
  TaskEvaluation ev;
  const auto classes = static_cast<std::size_t>(probs.cols());
  ev.confusion.assign(classes, std::vector<long>(classes, 0));
  long correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int pred = argmax_class(probs.row(static_cast<nn::Index>(i)));
    ev.predicted.push_back(pred);
    if (truth[i] >= 1 && static_cast<std::size_t>(truth[i]) <= classes) {
      ++ev.confusion[static_cast<std::size_t>(truth[i] - 1)][static_cast<std::size_t>(pred - 1)];
    }
    if (pred == truth[i]) ++correct;
  }
  ev.accuracy = truth.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(truth.size());
  return ev;
}

}  // namespace

TrainedRun train_run(const PreparedRun& run, const ExperimentConfig& config) {
  TrainedRun out;
  out.regime = config.regime;
  const LabeledDataset& data = run.train;
  const int k = config.k;
  const std::uint64_t init = derive_seed(run.seed, kInitStream);
  const TrainConfig tc = train_config(config, run.lambda, derive_seed(run.seed, kShuffleStream), config.epochs);

  switch (config.regime) {
    case Regime::kMtl: {
      auto net = make_mtl_network<ExperimentScalar>(k, data.n_bw, data.n_dur, data.n_traffic, init, config.trunk);
      append_curve(out.loss_curve, "mtl", train_mtl(net, data, tc), {kTaskBw, kTaskDur, kTaskTraffic});
      out.networks.emplace("mtl", std::move(net));
      break;
    }
    case Regime::kSingle: {
      auto net = make_single_task_network<ExperimentScalar>(k, data.n_traffic, init, config.trunk);
      append_curve(out.loss_curve, "single-traffic", train_single_task(net, data, Task::kTraffic, tc), {kTaskTraffic});
      out.networks.emplace(kTaskTraffic, std::move(net));
      if (config.single_all_tasks) {
        auto bw = make_single_task_network<ExperimentScalar>(k, data.n_bw, derive_seed(run.seed, kBwInitStream),
                                                             config.trunk);
        append_curve(out.loss_curve, "single-bw", train_single_task(bw, data, Task::kBandwidth, tc), {kTaskBw});
        out.networks.emplace(kTaskBw, std::move(bw));
        auto dur = make_single_task_network<ExperimentScalar>(k, data.n_dur, derive_seed(run.seed, kDurInitStream),
                                                              config.trunk);
        append_curve(out.loss_curve, "single-dur", train_single_task(dur, data, Task::kDuration, tc), {kTaskDur});
        out.networks.emplace(kTaskDur, std::move(dur));
      }
      break;
    }
    case Regime::kTransfer: {
      auto net = make_transfer_network<ExperimentScalar>(k, data.n_bw, data.n_dur, init, config.trunk);
      TransferConfig transfer;
      transfer.stage1 = tc;
      transfer.stage2 = train_config(config, run.lambda, derive_seed(run.seed, kShuffleStream),
                                     config.stage2_epochs < 0 ? config.epochs : config.stage2_epochs);
      transfer.head_seed = derive_seed(run.seed, kHeadStream);
      const TransferResult r = train_transfer(net, data, transfer);
      append_curve(out.loss_curve, "transfer-joint", r.stage1, {"joint"});
      append_curve(out.loss_curve, "transfer-traffic", r.stage2, {kTaskTraffic});
      out.networks.emplace(kTaskTraffic, std::move(net));
      break;
    }
  }
  return out;
}

std::map<std::string, TaskEvaluation> evaluate_run(TrainedRun& trained, const LabeledDataset& data) {
  std::vector<int> bw_truth, dur_truth, traffic_truth;
  for (const TaskLabels& l : data.labels) {
    bw_truth.push_back(l.y_bw);
    dur_truth.push_back(l.y_dur);
    traffic_truth.push_back(l.y_traffic.value_or(0));
  }
  std::map<std::string, TaskEvaluation> out;
  if (trained.regime == Regime::kMtl) {
    const auto probs = head_probabilities(trained.networks.at("mtl"), data.features);
    out[kTaskBw] = score(probs[kBandwidthHead], bw_truth);
    out[kTaskDur] = score(probs[kDurationHead], dur_truth);
    out[kTaskTraffic] = score(probs[kTrafficHead], traffic_truth);
    return out;
  }
  for (auto& [task, net] : trained.networks) {
    const auto probs = head_probabilities(net, data.features);
    const auto& truth = task == kTaskBw ? bw_truth : task == kTaskDur ? dur_truth : traffic_truth;
    out[task] = score(probs[0], truth);
  }
  return out;
}

std::uint64_t flows_fingerprint(const std::vector<FlowSample>& flows) {
  Fnv1a h;
  h.value(static_cast<std::uint64_t>(flows.size()));
  for (const FlowSample& f : flows) {
    h.value(static_cast<std::uint64_t>(f.packet_count()));
    h.bytes(f.relative_time.data(), f.relative_time.size() * sizeof(double));
    h.bytes(f.signed_length.data(), f.signed_length.size() * sizeof(double));
    h.value(f.traffic_label.value_or(0));
  }
  return h.state;
}

MetricsReport run_experiment(const std::vector<FlowSample>& flows, const ExperimentConfig& config,
                             const ProgressFn& progress) {
  config.validate();
  MetricsReport report;
  report.config = config;
  report.dataset_fingerprint = flows_fingerprint(flows);
  for (std::uint64_t seed : config.seeds) {
    if (progress) progress(std::string(to_string(config.regime)) + " seed " + std::to_string(seed));
    const PreparedRun run = prepare_run(flows, config, seed);
    TrainedRun trained = train_run(run, config);
    SeedResult sr;
    sr.seed = seed;
    sr.dividers = run.dividers;
    sr.divider_source = run.divider_source;
    sr.lambda = run.lambda;
    sr.n_train = run.train.size();
    sr.n_test = run.test.size();
    sr.n_labeled = run.labeled.size();
    sr.train_fingerprint = fingerprint(run.train);
    sr.test_fingerprint = fingerprint(run.test);
    sr.loss_curve = std::move(trained.loss_curve);
    for (auto& [task, ev] : evaluate_run(trained, run.test)) {
      sr.accuracy[task] = ev.accuracy;
      sr.confusion[task] = std::move(ev.confusion);
    }
    report.seeds.push_back(std::move(sr));
  }
  std::map<std::string, std::vector<double>> by_task;
  for (const SeedResult& sr : report.seeds) {
    for (const auto& [task, acc] : sr.accuracy) by_task[task].push_back(acc);
  }
  for (const auto& [task, accs] : by_task) {
    TaskSummary s;
    s.mean = std::accumulate(accs.begin(), accs.end(), 0.0) / static_cast<double>(accs.size());
    s.min = *std::min_element(accs.begin(), accs.end());
    s.max = *std::max_element(accs.begin(), accs.end());
    report.summary[task] = s;
  }
  return report;
}

namespace {

std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = kDigits[v & 15];
  return s;
}

}  // namespace

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["config"] = to_json(r.config);
  j["dataset_fingerprint"] = hex64(r.dataset_fingerprint);
  if (!r.ok()) j["error"] = r.error;
  nlohmann::json summary = nlohmann::json::object();
  for (const auto& [task, s] : r.summary) summary[task] = {{"mean", s.mean}, {"min", s.min}, {"max", s.max}};
  j["summary"] = std::move(summary);
  nlohmann::json seeds = nlohmann::json::array();
  for (const SeedResult& s : r.seeds) {
    seeds.push_back({{"seed", s.seed},
                     {"accuracy", s.accuracy},
                     {"confusion", s.confusion},
                     {"dividers", to_json(s.dividers)},
                     {"divider_source", s.divider_source},
                     {"lambda", s.lambda},
                     {"n_train", s.n_train},
                     {"n_test", s.n_test},
                     {"n_labeled", s.n_labeled},
                     {"train_fingerprint", hex64(s.train_fingerprint)},
                     {"test_fingerprint", hex64(s.test_fingerprint)},
                     {"loss_curve", s.loss_curve}});
  }
  j["seeds"] = std::move(seeds);
  return j;
}

// ---------------------------------------------------------------------------
// Sweeps

ExperimentConfig apply_axis(ExperimentConfig c, SweepAxis axis, const std::string& value) {
  auto parse_int = [&](const char* what) {
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(value, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != value.size()) throw UsageError(std::string("sweep: bad ") + what + " value '" + value + "'");
    return v;
  };
  switch (axis) {
    case SweepAxis::kNone:
      break;
    case SweepAxis::kLabels:
      c.labeled_per_class = parse_int("labels");
      break;
    case SweepAxis::kK:
      c.k = parse_int("k");
      break;
    case SweepAxis::kLambda:
      if (value == "ratio") {
        c.lambda_ratio = true;
      } else {
        std::size_t pos = 0;
        try {
          c.lambda = std::stod(value, &pos);
        } catch (const std::exception&) {
          pos = 0;
        }
        if (pos == 0 || pos != value.size()) throw UsageError("sweep: bad lambda value '" + value + "'");
        c.lambda_ratio = false;
      }
      break;
    case SweepAxis::kDividers:
      if (value == "labeled" || value == "full") {
        apply_dividers_json(c, nlohmann::json(value));
      } else {
        nlohmann::json j;
        try {
          j = nlohmann::json::parse(value);
        } catch (const nlohmann::json::exception& e) {
          throw UsageError("sweep: dividers value is neither a mode nor JSON: " + std::string(e.what()));
        }
        try {
          apply_dividers_json(c, j);
        } catch (const nlohmann::json::exception& e) {
          throw UsageError(std::string("sweep: bad dividers value: ") + e.what());
        }
      }
      c.validate();
      break;
  }
  return c;
}

std::vector<SweepCell> sweep(const std::vector<FlowSample>& flows, const ExperimentConfig& base, SweepAxis axis,
                             const std::vector<std::string>& values, const ProgressFn& progress) {
  if (values.empty()) throw UsageError("sweep: no values");
  std::vector<SweepCell> cells;
  for (const std::string& value : values) {
    SweepCell cell;
    cell.value = value;
    try {
      const ExperimentConfig config = apply_axis(base, axis, value);
      cell.report = run_experiment(flows, config, progress);
    } catch (const Error& e) {
      cell.report.config = base;
      cell.report.error = std::string(category_name(e.category())) + ": " + e.what();
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

void write_metrics_csv_header(std::ostream& out) {
  out << "axis,value,seed,task,accuracy,regime,k,lambda,labels_per_class\n";
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

}  // namespace

void write_metrics_csv_rows(std::ostream& out, SweepAxis axis, const std::string& value, const MetricsReport& r) {
  const auto& c = r.config;
  const std::string lambda = c.lambda_ratio ? "ratio" : format_double(c.lambda);
  if (!r.ok()) {
    out << to_string(axis) << ',' << csv_field(value) << ",,error,nan," << to_string(c.regime) << ',' << c.k << ','
        << lambda << ',' << c.labeled_per_class << '\n';
    return;
  }
  for (const SeedResult& s : r.seeds) {
    for (const auto& [task, acc] : s.accuracy) {
      out << to_string(axis) << ',' << csv_field(value) << ',' << s.seed << ',' << task << ',' << format_double(acc)
          << ',' << to_string(c.regime) << ',' << c.k << ',' << format_double(s.lambda) << ','
          << c.labeled_per_class << '\n';
    }
  }
}

void write_sweep_csv(std::ostream& out, SweepAxis axis, const std::vector<SweepCell>& cells) {
  write_metrics_csv_header(out);
  for (const SweepCell& cell : cells) write_metrics_csv_rows(out, axis, cell.value, cell.report);
}

// ---------------------------------------------------------------------------
// Predictions and checkpoints

void write_predictions_csv(std::ostream& out, const std::vector<std::size_t>& flow_ids, TrainedRun& trained,
                           const std::vector<FeatureMatrix>& features) {
  if (flow_ids.size() != features.size()) throw ShapeError("predictions: id count does not match features");
  std::map<std::string, nn::Matrix<ExperimentScalar>> probs;
  if (trained.regime == Regime::kMtl) {
    auto p = head_probabilities(trained.networks.at("mtl"), features);
    probs[kTaskBw] = std::move(p[kBandwidthHead]);
    probs[kTaskDur] = std::move(p[kDurationHead]);
    probs[kTaskTraffic] = std::move(p[kTrafficHead]);
  } else {
    for (auto& [task, net] : trained.networks) probs[task] = std::move(head_probabilities(net, features)[0]);
  }
  out << "flow_id,bw_class,dur_class,traffic_class,p_traffic_max\n";
  for (std::size_t i = 0; i < flow_ids.size(); ++i) {
    const auto r = static_cast<nn::Index>(i);
    out << flow_ids[i];
    for (const char* task : {kTaskBw, kTaskDur, kTaskTraffic}) {
      out << ',';
      if (auto it = probs.find(task); it != probs.end()) out << argmax_class(it->second.row(r));
    }
    out << ',';
    if (auto it = probs.find(kTaskTraffic); it != probs.end()) {
      out << format_double(static_cast<double>(it->second.row(r).maxCoeff()));
    }
    out << '\n';
  }
}

nlohmann::json run_to_checkpoint(const TrainedRun& trained, const ExperimentConfig& config, const PreparedRun& run) {
  nlohmann::json j;
  j["format"] = "mtltc-run";
  j["version"] = 1;
  j["regime"] = to_string(trained.regime);
  j["config"] = to_json(config);
  j["seed"] = run.seed;
  j["dividers"] = to_json(run.dividers);
  j["divider_source"] = run.divider_source;
  nlohmann::json nets = nlohmann::json::object();
  for (const auto& [name, net] : trained.networks) nets[name] = nn::checkpoint_to_json(net);
  j["networks"] = std::move(nets);
  return j;
}

LoadedRun run_from_checkpoint(const nlohmann::json& j) {
  if (j.value("format", "") != "mtltc-run" || j.value("version", 0) != 1) {
    throw DataFormatError("checkpoint: not an mtltc run checkpoint (version 1)");
  }
  LoadedRun out;
  try {
    out.config = experiment_config_from_json(j.at("config"));
    out.seed = j.at("seed").get<std::uint64_t>();
    out.dividers = dividers_from_json(j.at("dividers"));
    out.trained.regime = regime_from_string(j.at("regime").get<std::string>());
    for (const auto& [name, net] : j.at("networks").items()) {
      out.trained.networks.emplace(name, nn::network_from_checkpoint<ExperimentScalar>(net));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataFormatError(std::string("checkpoint: ") + e.what());
  }
  return out;
}

}  // namespace mtltc
