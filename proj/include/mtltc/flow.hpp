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

#include <Eigen/Core>
#include <json.hpp>

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mtltc {

enum class Protocol { kTcp, kUdp };

const char* to_string(Protocol p);

struct PacketRecord {
  double timestamp = 0.0;
  std::string src;
  std::string dst;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  Protocol protocol = Protocol::kTcp;
  std::uint32_t length = 0;
  bool tcp_fin = false;
  /// Ground-truth traffic class carried by the optional `label` column.
  std::optional<int> label;
};

/// Direction-independent 5-tuple: the lexicographically smaller endpoint is
/// always stored first.
struct FlowKey {
  std::string addr_a;
  std::uint16_t port_a = 0;
  std::string addr_b;
  std::uint16_t port_b = 0;
  Protocol protocol = Protocol::kTcp;

  static FlowKey of(const PacketRecord& p);
  auto operator<=>(const FlowKey&) const = default;
};

/// Durations are floored at this many seconds so single-packet flows keep a
/// finite bandwidth.
inline constexpr double kDurationEpsilon = 1e-3;

struct FlowSample {
  // Endpoints as seen on the first packet; that sender is "forward".
  std::string src;
  std::string dst;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  Protocol protocol = Protocol::kTcp;

  std::vector<double> relative_time;   // seconds since the first packet
  std::vector<double> signed_length;   // bytes, negative for backward packets

  double first_packet_time = 0.0;
  double last_packet_time = 0.0;
  double total_bytes = 0.0;
  double duration = 0.0;
  double bandwidth = 0.0;  // kbit/s
  std::optional<int> traffic_label;

  std::size_t packet_count() const { return relative_time.size(); }
  FlowKey key() const;

  bool operator==(const FlowSample&) const = default;
};

struct BandwidthDuration {
  double bandwidth;  // kbit/s
  double duration;   // s
};

/// duration = max(last - first, kDurationEpsilon); bandwidth = bytes * 8 / 1000 / duration.
BandwidthDuration compute_bandwidth_duration(const FlowSample& flow);

inline constexpr double kDefaultUdpTimeout = 15.0;  // seconds

/// Splits a packet log into flows. TCP flows end at (and include) the first
/// FIN packet; UDP flows end when the gap to the next packet of the same key
/// exceeds `udp_timeout`. Input is stably re-sorted by timestamp. Flows are
/// returned in order of their first packet.
std::vector<FlowSample> segment_flows(std::vector<PacketRecord> packets, double udp_timeout);

/// Rebuilds the packet records of a flow (without FIN flags).
std::vector<PacketRecord> flow_packets(const FlowSample& flow);

/// Drops flows with fewer than `min_packets` packets.
std::vector<FlowSample> filter_min_packets(std::vector<FlowSample> flows, std::size_t min_packets);

inline constexpr double kDefaultMaxLength = 1434.0;  // bytes
inline constexpr double kDefaultMaxIat = 1.0;        // seconds

/// Model input: k rows, column 0 = normalized inter-arrival time in [0, 1],
/// column 1 = normalized signed length in [-1, 1]. Rows at or past
/// `valid_len` are zero padding.
struct FeatureMatrix {
  Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor> values;
  int valid_len = 0;

  int k() const { return static_cast<int>(values.rows()); }
  auto iat() const { return values.col(0); }
  auto len() const { return values.col(1); }
};

FeatureMatrix extract_features(const FlowSample& flow, int k, double max_len = kDefaultMaxLength,
                               double max_iat = kDefaultMaxIat);

// Packet-log CSV: `ts,src,dst,sport,dport,proto,len,fin[,label]`.

struct PacketLog {
  std::vector<PacketRecord> packets;
  /// One line per rejected record (unsupported protocol), processing continues.
  std::vector<std::string> diagnostics;
};

PacketLog read_packet_csv(std::istream& in);
PacketLog read_packet_csv_file(const std::string& path);
void write_packet_csv(std::ostream& out, const std::vector<PacketRecord>& packets);

// Flow JSONL: one object per flow, packets as parallel arrays.

nlohmann::json flow_to_json(const FlowSample& flow, std::size_t id);
FlowSample flow_from_json(const nlohmann::json& j);
void write_flows_jsonl(std::ostream& out, const std::vector<FlowSample>& flows);
std::vector<FlowSample> read_flows_jsonl(std::istream& in);
std::vector<FlowSample> read_flows_jsonl_file(const std::string& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace mtltc
