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


// mtltc command-line driver.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mtltc/error.hpp"
#include "mtltc/experiment.hpp"
#include "mtltc/gradcheck.hpp"
#include "mtltc/synthetic.hpp"

namespace {

using namespace mtltc;

constexpr const char* kConfigEnv = "MTLTC_CONFIG";

/// Reads a JSON object as CLI11 config. Top-level keys set global options and
/// nested objects named after a subcommand set that subcommand's options.
/// Underscores in keys match dashes in flag names.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    nlohmann::json j = nlohmann::json::object();
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      if (opt->count() > 0) j[opt->get_lnames()[0]] = opt->results().size() == 1 ? nlohmann::json(opt->results()[0])
                                                                                 : nlohmann::json(opt->results());
      else if (default_also && !opt->get_default_str().empty()) j[opt->get_lnames()[0]] = opt->get_default_str();
    }
    return j.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static std::string flag_name(std::string key) {
    for (char& c : key) {
      if (c == '_') c = '-';
    }
    return key;
  }

  static std::string scalar_text(const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

  static void collect(const nlohmann::json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object() && parents.empty() && is_subcommand(key)) {
        collect(value, {key}, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = flag_name(key);
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar_text(v));
      } else if (value.is_boolean()) {
        item.inputs.push_back(value.get<bool>() ? "true" : "false");
      } else {
        item.inputs.push_back(scalar_text(value));
      }
      out.push_back(std::move(item));
    }
  }

  static bool is_subcommand(const std::string& key) {
    for (const char* name : {"ingest", "label", "train", "evaluate", "predict", "sweep", "synth", "gradcheck"}) {
      if (key == name) return true;
    }
    return false;
  }
};

struct Globals {
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  bool quiet = false;
};

Globals globals;

void progress(const std::string& message) {
  if (!globals.quiet) std::cerr << "mtltc: " << message << '\n';
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  return out;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataFormatError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  auto out = open_output(path);
  out << text;
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Metadata stamped into written artifacts; the creation time is left out
/// under --deterministic.
nlohmann::json run_metadata() {
  nlohmann::json meta = {{"tool", "mtltc"}};
  if (!globals.deterministic) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    meta["created"] = buf;
  }
  return meta;
}

std::uint64_t seed_or(std::uint64_t fallback) { return globals.seed.value_or(fallback); }

// Options shared by the commands that build experiments.
struct ExperimentFlags {
  std::string regime = "mtl";
  int labels_per_class = 20;
  int k = 60;
  std::string lambda = "1";
  std::string divider_mode = "labeled";
  std::string dividers;
  double train_fraction = 0.8;
  int epochs = 30;
  int stage2_epochs = -1;
  int batch_size = 64;
  int patience = 0;
  double learning_rate = 1e-3;
  bool single_all_tasks = false;
  double max_len = kDefaultMaxLength;
  double max_iat = kDefaultMaxIat;
  std::string trunk = "auto";

  void add_to(CLI::App* app) {
    app->add_option("--regime", regime, "Training regime: mtl, single or transfer")
        ->check(CLI::IsMember({"mtl", "single", "transfer"}))
        ->capture_default_str();
    app->add_option("--labels-per-class", labels_per_class, "Traffic labels kept per class")->capture_default_str();
    app->add_option("--k", k, "Packets per flow fed to the model")->capture_default_str();
    app->add_option("--lambda", lambda, "Traffic loss weight, or 'ratio' for unlabeled/labeled")->capture_default_str();
    app->add_option("--divider-mode", divider_mode, "Derive dividers from the 'labeled' subset or the 'full' train split")
        ->check(CLI::IsMember({"labeled", "full"}))
        ->capture_default_str();
    app->add_option("--dividers", dividers,
                    "Explicit dividers: a JSON file or inline object with 'bw' and/or 'dur' arrays");
    app->add_option("--train-fraction", train_fraction, "Share of each class used for training")->capture_default_str();
    app->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
    app->add_option("--stage2-epochs", stage2_epochs, "Transfer fine-tuning epochs (negative: same as --epochs)")
        ->capture_default_str();
    app->add_option("--batch-size", batch_size, "Mini-batch size")->capture_default_str();
    app->add_option("--patience", patience, "Early-stop after this many epochs without improvement (0: off)")
        ->capture_default_str();
    app->add_option("--learning-rate", learning_rate, "Adam learning rate")->capture_default_str();
    app->add_flag("--single-all-tasks", single_all_tasks, "Single regime also trains bandwidth and duration models");
    app->add_option("--max-len", max_len, "Packet length normalization (bytes)")->capture_default_str();
    app->add_option("--max-iat", max_iat, "Inter-arrival normalization (seconds)")->capture_default_str();
    app->add_option("--trunk", trunk, "Trunk variant: auto, full or reduced")
        ->check(CLI::IsMember({"auto", "full", "reduced"}))
        ->capture_default_str();
  }

  ExperimentConfig build(const std::string& dataset) const {
    nlohmann::json j = {{"dataset", dataset},
                        {"regime", regime},
                        {"labels_per_class", labels_per_class},
                        {"k", k},
                        {"train_fraction", train_fraction},
                        {"epochs", epochs},
                        {"stage2_epochs", stage2_epochs},
                        {"batch_size", batch_size},
                        {"patience", patience},
                        {"learning_rate", learning_rate},
                        {"single_all_tasks", single_all_tasks},
                        {"max_len", max_len},
                        {"max_iat", max_iat},
                        {"trunk", trunk}};
    if (lambda == "ratio") {
      j["lambda"] = "ratio";
    } else {
      try {
        std::size_t pos = 0;
        j["lambda"] = std::stod(lambda, &pos);
        if (pos != lambda.size()) throw std::invalid_argument(lambda);
      } catch (const std::exception&) {
        throw UsageError("--lambda must be a number or 'ratio', got '" + lambda + "'");
      }
    }
    if (dividers.empty()) {
      j["dividers"] = divider_mode;
    } else {
      nlohmann::json d;
      if (dividers.front() == '{') {
        try {
          d = nlohmann::json::parse(dividers);
        } catch (const nlohmann::json::exception& e) {
          throw UsageError(std::string("--dividers is not valid JSON: ") + e.what());
        }
      } else {
        d = read_json_file(dividers);
      }
      if (!d.is_object()) throw DataFormatError("dividers must be a JSON object");
      if (!d.contains("source")) d["source"] = divider_mode;
      j["dividers"] = d;
    }
    ExperimentConfig c = experiment_config_from_json(j);
    c.validate();
    return c;
  }
};

std::vector<FlowSample> load_flows(const std::string& path) {
  auto flows = read_flows_jsonl_file(path);
  progress("read " + std::to_string(flows.size()) + " flows from " + path);
  return flows;
}

// ---------------------------------------------------------------------------

struct IngestArgs {
  std::string in;
  std::string out;
  double udp_timeout = kDefaultUdpTimeout;
  std::size_t min_packets = 0;
};

int run_ingest(const IngestArgs& a) {
  if (!(a.udp_timeout > 0.0)) throw UsageError("--udp-timeout must be positive");
  const PacketLog log = read_packet_csv_file(a.in);
  for (const auto& d : log.diagnostics) std::cerr << "mtltc: skipped " << d << '\n';
  const std::size_t total = log.packets.size();
  auto flows = segment_flows(log.packets, a.udp_timeout);
  const std::size_t segmented = flows.size();
  flows = filter_min_packets(std::move(flows), a.min_packets);
  std::ostringstream out;
  write_flows_jsonl(out, flows);
  write_text(a.out, out.str());
  progress(std::to_string(total) + " packets -> " + std::to_string(segmented) + " flows, kept " +
           std::to_string(flows.size()) + " with >= " + std::to_string(a.min_packets) + " packets");
  return 0;
}

struct LabelArgs {
  std::string flows;
  std::string out;
  std::string dividers_out;
  ExperimentFlags exp;
};

int run_label(const LabelArgs& a) {
  const auto flows = load_flows(a.flows);
  const ExperimentConfig c = a.exp.build(a.flows);
  std::vector<std::size_t> all(flows.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const std::uint64_t seed = seed_or(1);
  const auto labeled = sample_labeled(flows, all, c.labeled_per_class, derive_seed(seed, 1));
  DividerSet d;
  if (!c.explicit_bw || !c.explicit_dur) {
    d = dividers_from_flows(flows, c.divider_mode == DividerMode::kLabeled ? std::span<const std::size_t>(labeled)
                                                                          : std::span<const std::size_t>(all));
  }
  if (c.explicit_bw) d.bw = *c.explicit_bw;
  if (c.explicit_dur) d.dur = *c.explicit_dur;
  const auto labels = make_labels(flows, d, labeled);

  std::ostringstream out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const TaskLabels& l = labels[i];
    nlohmann::json row = {{"flow_id", i},
                          {"y_bw", l.y_bw},
                          {"y_dur", l.y_dur},
                          {"y_traffic", l.y_traffic ? nlohmann::json(*l.y_traffic) : nlohmann::json(nullptr)},
                          {"traffic_mask", l.traffic_mask}};
    out << row.dump() << '\n';
  }
  write_text(a.out, out.str());
  if (!a.dividers_out.empty()) write_text(a.dividers_out, to_json(d).dump(2) + "\n");
  progress(std::to_string(labeled.size()) + " of " + std::to_string(flows.size()) + " flows keep a traffic label");
  return 0;
}

struct TrainArgs {
  std::string flows;
  std::string out;
  std::string history_out;
  ExperimentFlags exp;
};

int run_train(const TrainArgs& a) {
  const auto flows = load_flows(a.flows);
  ExperimentConfig c = a.exp.build(a.flows);
  const std::uint64_t seed = seed_or(1);
  c.seeds = {seed};
  const PreparedRun run = prepare_run(flows, c, seed);
  progress("training " + std::string(to_string(c.regime)) + " on " + std::to_string(run.train.size()) + " flows (" +
           std::to_string(run.labeled.size()) + " labeled), seed " + std::to_string(seed));
  TrainedRun trained = train_run(run, c);
  nlohmann::json j = run_to_checkpoint(trained, c, run);
  j["dataset_fingerprint"] = hex64(flows_fingerprint(flows));
  j["meta"] = run_metadata();
  write_text(a.out, j.dump() + "\n");
  if (!a.history_out.empty()) write_text(a.history_out, nlohmann::json(trained.loss_curve).dump(2) + "\n");
  if (!trained.loss_curve.empty()) progress("final epoch: " + trained.loss_curve.back().dump());
  return 0;
}

struct LoadedModel {
  LoadedRun run;
  std::string fingerprint;
};

LoadedModel load_model(const std::string& path) {
  const nlohmann::json j = read_json_file(path);
  LoadedModel m{run_from_checkpoint(j), j.value("dataset_fingerprint", std::string())};
  return m;
}

struct EvaluateArgs {
  std::string flows;
  std::string model;
  std::string metrics_out = "-";
  std::string report_out;
};

int run_evaluate(const EvaluateArgs& a) {
  const auto flows = load_flows(a.flows);
  LoadedModel model = load_model(a.model);
  if (!model.fingerprint.empty() && model.fingerprint != hex64(flows_fingerprint(flows))) {
    throw DataFormatError("flows in '" + a.flows + "' differ from the ones the model was trained on");
  }
  const ExperimentConfig& c = model.run.config;
  const PreparedRun run = prepare_run(flows, c, model.run.seed);
  if (run.dividers != model.run.dividers) {
    throw DataFormatError("dividers recomputed from '" + a.flows + "' do not match the checkpoint");
  }
  MetricsReport report;
  report.config = c;
  report.dataset_fingerprint = flows_fingerprint(flows);
  SeedResult sr;
  sr.seed = model.run.seed;
  sr.dividers = run.dividers;
  sr.divider_source = run.divider_source;
  sr.lambda = run.lambda;
  sr.n_train = run.train.size();
  sr.n_test = run.test.size();
  sr.n_labeled = run.labeled.size();
  sr.train_fingerprint = fingerprint(run.train);
  sr.test_fingerprint = fingerprint(run.test);
  for (auto& [task, ev] : evaluate_run(model.run.trained, run.test)) {
    sr.accuracy[task] = ev.accuracy;
    sr.confusion[task] = std::move(ev.confusion);
    report.summary[task] = {ev.accuracy, ev.accuracy, ev.accuracy};
    progress(task + " accuracy " + format_double(ev.accuracy) + " on " + std::to_string(run.test.size()) + " test flows");
  }
  report.seeds.push_back(std::move(sr));

  std::ostringstream csv;
  write_metrics_csv_header(csv);
  write_metrics_csv_rows(csv, SweepAxis::kNone, "", report);
  write_text(a.metrics_out, csv.str());
  if (!a.report_out.empty()) write_text(a.report_out, to_json(report).dump(2) + "\n");
  return 0;
}

struct PredictArgs {
  std::string flows;
  std::string model;
  std::string out = "-";
};

int run_predict(const PredictArgs& a) {
  const auto flows = load_flows(a.flows);
  LoadedModel model = load_model(a.model);
  const ExperimentConfig& c = model.run.config;
  std::vector<FeatureMatrix> features;
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < flows.size(); ++i) {
    features.push_back(extract_features(flows[i], c.k, c.max_len, c.max_iat));
    ids.push_back(i);
  }
  std::ostringstream csv;
  write_predictions_csv(csv, ids, model.run.trained, features);
  write_text(a.out, csv.str());
  return 0;
}

struct SweepArgs {
  std::string flows;
  std::string axis = "none";
  std::vector<std::string> values;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string out = "-";
  std::string report_out;
  ExperimentFlags exp;
};

int run_sweep(const SweepArgs& a) {
  const auto flows = load_flows(a.flows);
  ExperimentConfig base = a.exp.build(a.flows);
  base.seeds = a.seeds;
  if (globals.seed && a.seeds.size() == 1) base.seeds = {*globals.seed};
  const SweepAxis axis = sweep_axis_from_string(a.axis);
  std::vector<SweepCell> cells;
  if (axis == SweepAxis::kNone) {
    if (!a.values.empty()) throw UsageError("--values needs an --axis");
    cells.push_back({"", run_experiment(flows, base, progress)});
  } else {
    if (a.values.empty()) throw UsageError("--axis " + a.axis + " needs --values");
    cells = sweep(flows, base, axis, a.values, progress);
  }
  std::ostringstream csv;
  write_sweep_csv(csv, axis, cells);
  write_text(a.out, csv.str());
  if (!a.report_out.empty()) {
    nlohmann::json reports = nlohmann::json::array();
    for (const auto& cell : cells) reports.push_back({{"value", cell.value}, {"report", to_json(cell.report)}});
    write_text(a.report_out, nlohmann::json({{"axis", a.axis}, {"meta", run_metadata()}, {"cells", reports}}).dump(2) + "\n");
  }
  int failed = 0;
  for (const auto& cell : cells) {
    if (!cell.report.ok()) {
      ++failed;
      std::cerr << "mtltc: cell " << cell.value << " failed: " << cell.report.error << '\n';
    } else {
      for (const auto& [task, s] : cell.report.summary) {
        progress((cell.value.empty() ? std::string() : a.axis + "=" + cell.value + " ") + task + " mean " +
                 format_double(s.mean) + " [" + format_double(s.min) + ", " + format_double(s.max) + "]");
      }
    }
  }
  return failed == 0 ? 0 : 1;
}

struct SynthArgs {
  int classes = 5;
  int flows = 500;
  std::string spec;
  std::string spec_out;
  std::string out = "-";
  std::string flows_out;
};

int run_synth(const SynthArgs& a) {
  SyntheticSpec spec = a.spec.empty() ? default_synthetic_spec(a.classes, a.flows)
                                      : synthetic_spec_from_json(read_json_file(a.spec));
  if (!a.spec.empty()) spec.flows_per_class = a.flows;
  spec.validate();
  const auto packets = generate_synthetic(spec, seed_or(1));
  std::ostringstream csv;
  write_packet_csv(csv, packets);
  write_text(a.out, csv.str());
  if (!a.flows_out.empty()) {
    std::ostringstream jsonl;
    write_flows_jsonl(jsonl, segment_flows(packets, kDefaultUdpTimeout));
    write_text(a.flows_out, jsonl.str());
  }
  if (!a.spec_out.empty()) write_text(a.spec_out, to_json(spec).dump(2) + "\n");
  progress(std::to_string(spec.classes.size()) + " classes x " + std::to_string(spec.flows_per_class) + " flows, " +
           std::to_string(packets.size()) + " packets");
  return 0;
}

struct GradcheckArgs {
  int k = 12;
  double tol = 1e-4;
  double step = 1e-4;
  int batch = 8;
  double lambda = 2.0;
};

int run_gradcheck(const GradcheckArgs& a) {
  if (a.batch < 1) throw UsageError("--batch must be >= 1");
  GradientCheckOptions opt;
  opt.tolerance = a.tol;
  opt.step = a.step;
  std::mt19937_64 rng(seed_or(1));
  auto input = [&](nn::Index length, nn::Index channels) {
    nn::Batch<double> b;
    b.batch = a.batch;
    b.length = length;
    b.data.resize(a.batch * length, channels);
    nn::fill_uniform(b.data, 1.0, rng);
    return b;
  };
  bool ok = true;
  auto report = [&](const std::string& what, const GradientCheckReport& r) {
    ok = ok && r.ok();
    std::printf("%s %-10s %zu/%zu entries, max relative error %.3g", r.ok() ? "PASS" : "FAIL", what.c_str(), r.passed,
                r.checked, r.max_relative_error);
    if (!r.ok()) std::printf(" (worst %s[%ld])", r.worst.param.c_str(), static_cast<long>(r.worst.index));
    std::printf("\n");
  };

  nn::Conv1D<double> conv(2, 4, 3, "conv");
  conv.init_he_uniform(rng);
  nn::fill_uniform(conv.bias().value, 0.1, rng);
  report("conv1d", check_layer_gradients(conv, input(a.k, 2), {&conv.weight(), &conv.bias()}, rng, opt));
  nn::MaxPool1D<double> pool;
  report("maxpool1d", check_layer_gradients(pool, input(a.k, 3), {}, rng, opt));
  nn::ReLU<double> relu;
  report("relu", check_layer_gradients(relu, input(a.k, 3), {}, rng, opt));
  nn::Flatten<double> flatten;
  report("flatten", check_layer_gradients(flatten, input(a.k, 3), {}, rng, opt));
  nn::Dense<double> dense(16, 5, "dense");
  dense.init_he_uniform(rng);
  report("dense", check_layer_gradients(dense, input(1, 16), {&dense.weight(), &dense.bias()}, rng, opt));

  nn::Network<double> net(tiny_architecture(a.k, {5, 5, 5}), seed_or(1));
  std::vector<TaskLabels> labels(static_cast<std::size_t>(a.batch));
  std::uniform_int_distribution<int> cls(1, 5);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i].y_bw = cls(rng);
    labels[i].y_dur = cls(rng);
    if (i % 2 == 0) {
      labels[i].y_traffic = cls(rng);
      labels[i].traffic_mask = 1;
    }
  }
  report("mtl-net", check_gradients(net, input(a.k, 2), mtl_targets<double>(labels, a.lambda), opt));
  if (!ok) throw NumericalError("gradient check failed");
  return 0;
}

int exit_code(ErrorCategory c) { return static_cast<int>(c); }

int fail(ErrorCategory c, const std::string& message) {
  std::cerr << "error: " << category_name(c) << ": " << message << '\n';
  return exit_code(c);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-task traffic classification: ingest, label, train, evaluate and sweep", "mtltc"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file; flags on the command line win")->envname(kConfigEnv);
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.add_option("--seed", globals.seed, "Seed for every random choice");
  app.add_flag("--deterministic", globals.deterministic, "Omit creation timestamps from written files");
  app.add_flag("-q,--quiet", globals.quiet, "No progress output on stderr");

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Segment a packet CSV into flow JSONL");
  ingest_cmd->add_option("--in", ingest.in, "Packet CSV")->required();
  ingest_cmd->add_option("--out", ingest.out, "Flow JSONL ('-' for stdout)")->required();
  ingest_cmd->add_option("--udp-timeout", ingest.udp_timeout, "UDP inactivity timeout (s)")->capture_default_str();
  ingest_cmd->add_option("--min-packets", ingest.min_packets, "Drop flows with fewer packets")->capture_default_str();

  LabelArgs label;
  auto* label_cmd = app.add_subcommand("label", "Compute dividers and per-flow task labels");
  label_cmd->add_option("--flows", label.flows, "Flow JSONL")->required();
  label_cmd->add_option("--out", label.out, "Label JSONL ('-' for stdout)")->required();
  label_cmd->add_option("--dividers-out", label.dividers_out, "Write the dividers used as JSON");
  label.exp.add_to(label_cmd);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train one seeded run and write a checkpoint");
  train_cmd->add_option("--flows", train.flows, "Flow JSONL")->required();
  train_cmd->add_option("--out", train.out, "Checkpoint JSON")->required();
  train_cmd->add_option("--history-out", train.history_out, "Per-epoch loss history JSON");
  train.exp.add_to(train_cmd);

  EvaluateArgs evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a checkpoint on its held-out split");
  evaluate_cmd->add_option("--flows", evaluate.flows, "Flow JSONL used for training")->required();
  evaluate_cmd->add_option("--model", evaluate.model, "Checkpoint JSON")->required();
  evaluate_cmd->add_option("--metrics-out", evaluate.metrics_out, "Metrics CSV ('-' for stdout)")->capture_default_str();
  evaluate_cmd->add_option("--report-out", evaluate.report_out, "Full JSON report");

  PredictArgs predict;
  auto* predict_cmd = app.add_subcommand("predict", "Class predictions for every flow");
  predict_cmd->add_option("--flows", predict.flows, "Flow JSONL")->required();
  predict_cmd->add_option("--model", predict.model, "Checkpoint JSON")->required();
  predict_cmd->add_option("--out", predict.out, "Prediction CSV ('-' for stdout)")->capture_default_str();

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "Seeded experiments over one axis");
  sweep_cmd->add_option("--flows", sweep_args.flows, "Flow JSONL")->required();
  sweep_cmd->add_option("--axis", sweep_args.axis, "none, labels, k, lambda or dividers")
      ->check(CLI::IsMember({"none", "labels", "k", "lambda", "dividers"}))
      ->capture_default_str();
  sweep_cmd->add_option("--values", sweep_args.values, "Axis values (space separated)");
  sweep_cmd->add_option("--seeds", sweep_args.seeds, "Training seeds")->capture_default_str();
  sweep_cmd->add_option("--out", sweep_args.out, "Combined CSV ('-' for stdout)")->capture_default_str();
  sweep_cmd->add_option("--report-out", sweep_args.report_out, "Per-cell JSON reports");
  sweep_args.exp.add_to(sweep_cmd);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a labeled synthetic packet CSV");
  synth_cmd->add_option("--classes", synth.classes, "Traffic classes")->capture_default_str();
  synth_cmd->add_option("--flows", synth.flows, "Flows per class")->capture_default_str();
  synth_cmd->add_option("--spec", synth.spec, "Generator spec JSON (overrides --classes)");
  synth_cmd->add_option("--spec-out", synth.spec_out, "Write the generator spec used");
  synth_cmd->add_option("--out", synth.out, "Packet CSV ('-' for stdout)")->capture_default_str();
  synth_cmd->add_option("--flows-out", synth.flows_out, "Also write segmented flow JSONL");

  GradcheckArgs gradcheck;
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every layer and a tiny network");
  gradcheck_cmd->add_option("--k", gradcheck.k, "Input length")->capture_default_str();
  gradcheck_cmd->add_option("--tol", gradcheck.tol, "Relative error tolerance")->capture_default_str();
  gradcheck_cmd->add_option("--step", gradcheck.step, "Finite-difference step")->capture_default_str();
  gradcheck_cmd->add_option("--batch", gradcheck.batch, "Samples per check")->capture_default_str();
  gradcheck_cmd->add_option("--lambda", gradcheck.lambda, "Traffic loss weight")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(ErrorCategory::kUsage, e.what());
  }

  try {
    if (*ingest_cmd) return run_ingest(ingest);
    if (*label_cmd) return run_label(label);
    if (*train_cmd) return run_train(train);
    if (*evaluate_cmd) return run_evaluate(evaluate);
    if (*predict_cmd) return run_predict(predict);
    if (*sweep_cmd) return run_sweep(sweep_args);
    if (*synth_cmd) return run_synth(synth);
    if (*gradcheck_cmd) return run_gradcheck(gradcheck);
  } catch (const Error& e) {
    return fail(e.category(), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(ErrorCategory::kDataFormat, e.what());
  } catch (const std::bad_alloc&) {
    return fail(ErrorCategory::kNumerical, "out of memory");
  }
  return fail(ErrorCategory::kUsage, "no subcommand");
}
