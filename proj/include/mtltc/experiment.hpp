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
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mtltc/baselines.hpp"
#include "mtltc/flow.hpp"
#include "mtltc/labels.hpp"
#include "mtltc/mtl.hpp"
#include "mtltc/nn/checkpoint.hpp"

namespace mtltc {

/// Scalar type used for every training run of the harness and the CLI.
using ExperimentScalar = float;
using ExperimentNetwork = nn::Network<ExperimentScalar>;

enum class Regime { kMtl, kSingle, kTransfer };
const char* to_string(Regime r);
Regime regime_from_string(const std::string& s);

/// Where derived bandwidth/duration dividers come from. Axes with explicit
/// dividers in the config ignore this.
enum class DividerMode {
  kLabeled,  // class means of the labeled training subset
  kFull,     // class means of every labeled training flow
};
const char* to_string(DividerMode m);
DividerMode divider_mode_from_string(const std::string& s);

struct ExperimentConfig {
  std::string dataset;  // echoed in reports only
  Regime regime = Regime::kMtl;
  int labeled_per_class = 20;
  int k = 60;
  double lambda = 1.0;
  bool lambda_ratio = false;  // lambda = unlabeled / labeled training flows
  DividerMode divider_mode = DividerMode::kLabeled;
  std::optional<std::vector<double>> explicit_bw;
  std::optional<std::vector<double>> explicit_dur;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  double train_fraction = 0.8;
  int epochs = 30;
  int stage2_epochs = -1;  // transfer fine-tuning; negative means `epochs`
  int batch_size = 64;
  int patience = 0;
  nn::AdamConfig adam;
  bool single_all_tasks = false;  // SINGLE also trains bandwidth and duration models
  double max_len = kDefaultMaxLength;
  double max_iat = kDefaultMaxIat;
  TrunkVariant trunk = TrunkVariant::kAuto;

  /// Throws UsageError / ShapeError for invalid values, including a k that the
  /// trunk cannot accept.
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
/// Keys absent from `j` keep their defaults from `base`.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, ExperimentConfig base = {});

/// Stratified by traffic label; flows without a label always go to training.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};
Split split_flows(const std::vector<FlowSample>& flows, double train_fraction, std::uint64_t seed);

/// Independent sub-seed for one purpose (split, sampling, init, shuffle...).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Everything one seed of an experiment trains and evaluates on.
struct PreparedRun {
  std::uint64_t seed = 0;
  Split split;
  std::vector<std::size_t> labeled;  // flow indices, subset of split.train
  DividerSet dividers;
  std::string divider_source;
  double lambda = 1.0;
  LabeledDataset train;
  LabeledDataset test;  // traffic labels always present (mask 1)
};

PreparedRun prepare_run(const std::vector<FlowSample>& flows, const ExperimentConfig& config, std::uint64_t seed);

/// Trained networks of one regime. MTL: {mtl}; SINGLE: {traffic[, bw, dur]};
/// TRANSFER: {traffic}.
struct TrainedRun {
  Regime regime = Regime::kMtl;
  std::map<std::string, ExperimentNetwork> networks;
  std::vector<nlohmann::json> loss_curve;
};

TrainedRun train_run(const PreparedRun& run, const ExperimentConfig& config);

struct TaskEvaluation {
  double accuracy = 0;
  std::vector<std::vector<long>> confusion;  // [true - 1][pred - 1]
  std::vector<int> predicted;                // 1-based
};

/// Per-flow predictions of a trained run on `data`. Tasks a regime does not
/// predict are absent.
std::map<std::string, TaskEvaluation> evaluate_run(TrainedRun& trained, const LabeledDataset& data);

struct SeedResult {
  std::uint64_t seed = 0;
  std::map<std::string, double> accuracy;
  std::map<std::string, std::vector<std::vector<long>>> confusion;
  std::vector<nlohmann::json> loss_curve;
  DividerSet dividers;
  std::string divider_source;
  double lambda = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t n_labeled = 0;
  std::uint64_t train_fingerprint = 0;
  std::uint64_t test_fingerprint = 0;
};

struct TaskSummary {
  double mean = 0;
  double min = 0;
  double max = 0;
};

struct MetricsReport {
  ExperimentConfig config;
  std::vector<SeedResult> seeds;
  std::map<std::string, TaskSummary> summary;
  std::uint64_t dataset_fingerprint = 0;
  std::string error;  // non-empty for a failed sweep cell

  bool ok() const { return error.empty(); }
};

nlohmann::json to_json(const MetricsReport& r);

using ProgressFn = std::function<void(const std::string&)>;

/// Split, label-mask, train and evaluate once per seed, then aggregate.
MetricsReport run_experiment(const std::vector<FlowSample>& flows, const ExperimentConfig& config,
                             const ProgressFn& progress = {});

/// Fingerprint over the flows' packet arrays and labels.
std::uint64_t flows_fingerprint(const std::vector<FlowSample>& flows);

enum class SweepAxis { kNone, kLabels, kK, kLambda, kDividers };
const char* to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(const std::string& s);

/// `base` with one axis set from its text value. LAMBDA accepts "ratio";
/// DIVIDERS accepts "labeled", "full" or a JSON object with optional "bw",
/// "dur" and "source" members; missing axes are derived.
ExperimentConfig apply_axis(ExperimentConfig base, SweepAxis axis, const std::string& value);

struct SweepCell {
  std::string value;
  MetricsReport report;
};

/// One experiment per value with shared seeds. Failed cells keep their error
/// and the sweep continues.
std::vector<SweepCell> sweep(const std::vector<FlowSample>& flows, const ExperimentConfig& base, SweepAxis axis,
                             const std::vector<std::string>& values, const ProgressFn& progress = {});

/// Long-format CSV: axis,value,seed,task,accuracy,regime,k,lambda,labels_per_class.
/// Failed cells produce one row with task "error" and accuracy "nan".
void write_metrics_csv_header(std::ostream& out);
void write_metrics_csv_rows(std::ostream& out, SweepAxis axis, const std::string& value, const MetricsReport& report);
void write_sweep_csv(std::ostream& out, SweepAxis axis, const std::vector<SweepCell>& cells);

/// Prediction CSV: flow_id,bw_class,dur_class,traffic_class,p_traffic_max.
/// Columns a regime does not predict are left empty.
void write_predictions_csv(std::ostream& out, const std::vector<std::size_t>& flow_ids, TrainedRun& trained,
                           const std::vector<FeatureMatrix>& features);

/// Checkpoint of a trained run (all networks plus the config and dividers).
nlohmann::json run_to_checkpoint(const TrainedRun& trained, const ExperimentConfig& config, const PreparedRun& run);
/// Restores the networks, config, seed and dividers stored by run_to_checkpoint.
struct LoadedRun {
  TrainedRun trained;
  ExperimentConfig config;
  std::uint64_t seed = 0;
  DividerSet dividers;
};
LoadedRun run_from_checkpoint(const nlohmann::json& j);

}  // namespace mtltc
