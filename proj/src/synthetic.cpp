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


#include "mtltc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "mtltc/error.hpp"

namespace mtltc {

double ClassGenerator::expected_duration() const {
  const double mean_packets = 0.5 * (min_packets + max_packets);
  const double jitter_mean = std::exp(0.5 * rate_sigma * rate_sigma);
  const double mean_iat = burst_fraction * burst_iat + (1.0 - burst_fraction) * idle_iat * jitter_mean;
  return (mean_packets - 1.0) * mean_iat;
}

double ClassGenerator::expected_bytes() const {
  const double mean_packets = 0.5 * (min_packets + max_packets);
  const double forward = 0.5 * (40 + forward_max);
  const double backward = large_fraction * 0.5 * (1200 + 1434) + (1.0 - large_fraction) * 0.5 * (40 + 200);
  return mean_packets * (forward_fraction * forward + (1.0 - forward_fraction) * backward);
}

void SyntheticSpec::validate() const {
  if (classes.size() < 2) throw UsageError("synthetic: need at least two classes");
  if (flows_per_class < 1) throw UsageError("synthetic: flows per class must be >= 1");
  if (!(start_window > 0.0) || !(max_gap > 0.0)) throw UsageError("synthetic: window and gap cap must be positive");
  for (const auto& c : classes) {
    const bool ok = c.label >= 1 && c.min_packets >= 1 && c.max_packets >= c.min_packets && c.burst_iat > 0.0 &&
                    c.idle_iat > 0.0 && c.rate_sigma >= 0.0 && c.burst_fraction >= 0.0 && c.burst_fraction <= 1.0 &&
                    c.forward_fraction >= 0.0 && c.forward_fraction <= 1.0 && c.large_fraction >= 0.0 &&
                    c.large_fraction <= 1.0 && c.forward_max >= 40;
    if (!ok) throw UsageError("synthetic: invalid generator parameters for class " + std::to_string(c.label));
  }
  for (std::size_t i = 0; i < classes.size(); ++i) {
    for (std::size_t j = i + 1; j < classes.size(); ++j) {
      const auto& a = classes[i];
      const auto& b = classes[j];
      if (a.label == b.label) throw UsageError("synthetic: duplicate class label " + std::to_string(a.label));
      const double bw_a = a.expected_bytes() / a.expected_duration();
      const double bw_b = b.expected_bytes() / b.expected_duration();
      if (a.expected_duration() == b.expected_duration() || bw_a == bw_b) {
        throw UsageError("synthetic: classes " + std::to_string(a.label) + " and " + std::to_string(b.label) +
                         " share a mean bandwidth or duration");
      }
    }
  }
}

SyntheticSpec default_synthetic_spec(int classes, int flows_per_class) {
  if (classes < 2) throw UsageError("synthetic: need at least two classes");
  // label, proto, min, max, burst_iat, burst_frac, idle_iat, sigma, fwd_frac, large_frac, fwd_max
  const std::vector<ClassGenerator> presets = {
      {1, Protocol::kUdp, 151, 227, 0.002, 0.30, 0.020, 0.10, 0.35, 0.80, 300},
      {2, Protocol::kUdp, 312, 468, 0.002, 0.30, 0.035, 0.10, 0.35, 0.45, 300},
      {3, Protocol::kUdp, 600, 900, 0.002, 0.30, 0.060, 0.10, 0.35, 0.75, 300},
      {4, Protocol::kUdp, 637, 955, 0.002, 0.30, 0.100, 0.10, 0.35, 0.40, 300},
      {5, Protocol::kUdp, 760, 1140, 0.002, 0.30, 0.170, 0.10, 0.35, 0.70, 300},
  };
  SyntheticSpec spec;
  spec.flows_per_class = flows_per_class;
  for (int c = 0; c < classes; ++c) {
    ClassGenerator g = presets[static_cast<std::size_t>(c) % presets.size()];
    const int round = c / static_cast<int>(presets.size());
    g.label = c + 1;
    // Later rounds stretch idle gaps and shift the mix so means stay distinct.
    g.idle_iat *= 1.0 + 0.37 * round;
    g.large_fraction = std::clamp(g.large_fraction - 0.07 * round, 0.05, 0.95);
    spec.classes.push_back(g);
  }
  spec.validate();
  return spec;
}

nlohmann::json to_json(const SyntheticSpec& spec) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& g : spec.classes) {
    classes.push_back({{"label", g.label},
                       {"protocol", to_string(g.protocol)},
                       {"min_packets", g.min_packets},
                       {"max_packets", g.max_packets},
                       {"burst_iat", g.burst_iat},
                       {"burst_fraction", g.burst_fraction},
                       {"idle_iat", g.idle_iat},
                       {"rate_sigma", g.rate_sigma},
                       {"forward_fraction", g.forward_fraction},
                       {"large_fraction", g.large_fraction},
                       {"forward_max", g.forward_max}});
  }
  return {{"flows_per_class", spec.flows_per_class},
          {"start_window", spec.start_window},
          {"max_gap", spec.max_gap},
          {"classes", std::move(classes)}};
}

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
  SyntheticSpec spec;
  try {
    spec.flows_per_class = j.value("flows_per_class", spec.flows_per_class);
    spec.start_window = j.value("start_window", spec.start_window);
    spec.max_gap = j.value("max_gap", spec.max_gap);
    for (const auto& c : j.at("classes")) {
      ClassGenerator g;
      g.label = c.value("label", static_cast<int>(spec.classes.size()) + 1);
      const std::string proto = c.value("protocol", std::string("udp"));
      if (proto != "tcp" && proto != "udp") throw UsageError("synthetic: unsupported protocol '" + proto + "'");
      g.protocol = proto == "tcp" ? Protocol::kTcp : Protocol::kUdp;
      g.min_packets = c.value("min_packets", g.min_packets);
      g.max_packets = c.value("max_packets", g.max_packets);
      g.burst_iat = c.value("burst_iat", g.burst_iat);
      g.burst_fraction = c.value("burst_fraction", g.burst_fraction);
      g.idle_iat = c.value("idle_iat", g.idle_iat);
      g.rate_sigma = c.value("rate_sigma", g.rate_sigma);
      g.forward_fraction = c.value("forward_fraction", g.forward_fraction);
      g.large_fraction = c.value("large_fraction", g.large_fraction);
      g.forward_max = c.value("forward_max", g.forward_max);
      spec.classes.push_back(g);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataFormatError(std::string("synthetic spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

std::vector<PacketRecord> generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> exp1(1.0);
  std::vector<PacketRecord> packets;
  int flow_id = 0;
  for (const ClassGenerator& g : spec.classes) {
    std::uniform_int_distribution<int> count(g.min_packets, g.max_packets);
    std::lognormal_distribution<double> jitter(0.0, g.rate_sigma);
    std::uniform_int_distribution<int> large(1200, 1434);
    std::uniform_int_distribution<int> small(40, 200);
    std::uniform_int_distribution<int> forward_size(40, g.forward_max);
    std::uniform_int_distribution<int> port(1024, 65535);
    for (int f = 0; f < spec.flows_per_class; ++f, ++flow_id) {
      const std::string client = "10." + std::to_string((flow_id >> 16) & 255) + "." +
                                 std::to_string((flow_id >> 8) & 255) + "." + std::to_string(flow_id & 255);
      const std::string server = "172.16." + std::to_string(g.label & 255) + ".1";
      const auto client_port = static_cast<std::uint16_t>(port(rng));
      const std::uint16_t server_port = 443;
      const int n = count(rng);
      const double j = jitter(rng);
      double t = unit(rng) * spec.start_window;
      for (int i = 0; i < n; ++i) {
        if (i > 0) {
          const double gap = unit(rng) < g.burst_fraction ? g.burst_iat * exp1(rng) : g.idle_iat * j * exp1(rng);
          t += std::min(gap, spec.max_gap);
        }
        // The first packet always comes from the client.
        const bool forward = i == 0 || unit(rng) < g.forward_fraction;
        PacketRecord p;
        p.timestamp = t;
        p.protocol = g.protocol;
        p.src = forward ? client : server;
        p.dst = forward ? server : client;
        p.src_port = forward ? client_port : server_port;
        p.dst_port = forward ? server_port : client_port;
        if (forward) {
          p.length = static_cast<std::uint32_t>(forward_size(rng));
        } else {
          p.length = static_cast<std::uint32_t>(unit(rng) < g.large_fraction ? large(rng) : small(rng));
        }
        p.tcp_fin = g.protocol == Protocol::kTcp && i == n - 1;
        p.label = g.label;
        packets.push_back(std::move(p));
      }
    }
  }
  std::stable_sort(packets.begin(), packets.end(),
                   [](const PacketRecord& a, const PacketRecord& b) { return a.timestamp < b.timestamp; });
  return packets;
}

}  // namespace mtltc
