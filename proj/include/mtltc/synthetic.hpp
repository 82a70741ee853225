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
#include <vector>

#include "mtltc/flow.hpp"

namespace mtltc {

/// Packet-level generator for one traffic class.
///
/// A flow has a uniform packet count in [min_packets, max_packets]. Each
/// inter-arrival gap is either a burst gap (mean `burst_iat`) with
/// probability `burst_fraction` or an idle gap with mean `idle_iat * j`,
/// both exponential, where j ~ LogNormal(0, rate_sigma) is drawn once per
/// flow. Backward packets are large (1200..1434 B) with probability
/// `large_fraction`, small (40..200 B) otherwise; forward packets are
/// 40..`forward_max` B.
struct ClassGenerator {
  int label = 1;
  Protocol protocol = Protocol::kUdp;
  int min_packets = 100;
  int max_packets = 300;
  double burst_iat = 0.002;
  double burst_fraction = 0.5;
  double idle_iat = 0.1;
  double rate_sigma = 0.3;
  double forward_fraction = 0.3;
  double large_fraction = 0.5;
  int forward_max = 300;

  /// Mean flow duration implied by the parameters (ignores the gap cap).
  double expected_duration() const;
  /// Mean bytes per flow.
  double expected_bytes() const;
};

struct SyntheticSpec {
  std::vector<ClassGenerator> classes;
  int flows_per_class = 100;
  double start_window = 3600.0;  // flow start times are uniform over [0, start_window)
  double max_gap = 10.0;         // seconds, keeps UDP flows under the 15 s timeout

  void validate() const;
};

/// Five preset classes whose mean bandwidths and durations are pairwise distinct.
/// Extra classes (n > 5) are interpolated variants.
SyntheticSpec default_synthetic_spec(int classes, int flows_per_class);

nlohmann::json to_json(const SyntheticSpec& spec);
/// Missing generator fields keep the ClassGenerator defaults.
SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);

/// Packet log with one unique 5-tuple per flow and the `label` column filled.
/// UDP flows rely on the timeout; TCP flows carry FIN on their last packet.
/// Records are sorted by timestamp.
std::vector<PacketRecord> generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace mtltc
