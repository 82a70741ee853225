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


#include "mtltc/flow.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string_view>

#include "mtltc/error.hpp"

namespace mtltc {

const char* to_string(Protocol p) { return p == Protocol::kTcp ? "tcp" : "udp"; }

FlowKey FlowKey::of(const PacketRecord& p) {
  FlowKey k;
  k.protocol = p.protocol;
  if (std::tie(p.src, p.src_port) <= std::tie(p.dst, p.dst_port)) {
    k.addr_a = p.src, k.port_a = p.src_port, k.addr_b = p.dst, k.port_b = p.dst_port;
  } else {
    k.addr_a = p.dst, k.port_a = p.dst_port, k.addr_b = p.src, k.port_b = p.src_port;
  }
  return k;
}

FlowKey FlowSample::key() const {
  PacketRecord p;
  p.src = src, p.dst = dst, p.src_port = src_port, p.dst_port = dst_port, p.protocol = protocol;
  return FlowKey::of(p);
}

BandwidthDuration compute_bandwidth_duration(const FlowSample& flow) {
  const double duration = std::max(flow.last_packet_time - flow.first_packet_time, kDurationEpsilon);
  return {(flow.total_bytes * 8.0 / 1000.0) / duration, duration};
}

namespace {

FlowSample start_flow(const PacketRecord& p) {
  FlowSample f;
  f.src = p.src, f.dst = p.dst, f.src_port = p.src_port, f.dst_port = p.dst_port;
  f.protocol = p.protocol;
  f.first_packet_time = p.timestamp;
  f.traffic_label = p.label;
  return f;
}

void append_packet(FlowSample& f, const PacketRecord& p) {
  const bool forward = p.src == f.src && p.src_port == f.src_port;
  const double len = static_cast<double>(p.length);
  f.relative_time.push_back(p.timestamp - f.first_packet_time);
  f.signed_length.push_back(forward ? len : -len);
  f.last_packet_time = p.timestamp;
  f.total_bytes += len;
}

void finish_flow(FlowSample& f) {
  const BandwidthDuration bd = compute_bandwidth_duration(f);
  f.duration = bd.duration;
  f.bandwidth = bd.bandwidth;
}

}  // namespace

std::vector<FlowSample> segment_flows(std::vector<PacketRecord> packets, double udp_timeout) {
  if (!(udp_timeout > 0.0)) throw UsageError("segment_flows: udp_timeout must be positive");
  std::stable_sort(packets.begin(), packets.end(),
                   [](const PacketRecord& a, const PacketRecord& b) { return a.timestamp < b.timestamp; });

  std::vector<FlowSample> flows;
  std::map<FlowKey, std::size_t> open;  // key -> index into flows
  for (const PacketRecord& p : packets) {
    const FlowKey key = FlowKey::of(p);
    auto it = open.find(key);
    if (it != open.end() && p.protocol == Protocol::kUdp &&
        p.timestamp - flows[it->second].last_packet_time > udp_timeout) {
      finish_flow(flows[it->second]);
      open.erase(it);
      it = open.end();
    }
    if (it == open.end()) {
      flows.push_back(start_flow(p));
      it = open.emplace(key, flows.size() - 1).first;
    }
    append_packet(flows[it->second], p);
    if (p.protocol == Protocol::kTcp && p.tcp_fin) {
      finish_flow(flows[it->second]);
      open.erase(it);
    }
  }
  for (const auto& [key, index] : open) finish_flow(flows[index]);
  return flows;
}

std::vector<PacketRecord> flow_packets(const FlowSample& flow) {
  std::vector<PacketRecord> out;
  out.reserve(flow.packet_count());
  for (std::size_t i = 0; i < flow.packet_count(); ++i) {
    PacketRecord p;
    const bool forward = flow.signed_length[i] >= 0.0;
    p.timestamp = flow.first_packet_time + flow.relative_time[i];
    p.src = forward ? flow.src : flow.dst;
    p.dst = forward ? flow.dst : flow.src;
    p.src_port = forward ? flow.src_port : flow.dst_port;
    p.dst_port = forward ? flow.dst_port : flow.src_port;
    p.protocol = flow.protocol;
    p.length = static_cast<std::uint32_t>(std::abs(flow.signed_length[i]));
    p.label = flow.traffic_label;
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<FlowSample> filter_min_packets(std::vector<FlowSample> flows, std::size_t min_packets) {
  std::erase_if(flows, [&](const FlowSample& f) { return f.packet_count() < min_packets; });
  return flows;
}

FeatureMatrix extract_features(const FlowSample& flow, int k, double max_len, double max_iat) {
  if (k < 1) throw UsageError("extract_features: k must be >= 1");
  if (!(max_len > 0.0) || !(max_iat > 0.0)) throw UsageError("extract_features: normalization maxima must be positive");
  if (flow.packet_count() == 0) throw DataFormatError("extract_features: flow has no packets");

  FeatureMatrix fm;
  fm.values.setZero(k, 2);
  fm.valid_len = static_cast<int>(std::min<std::size_t>(flow.packet_count(), static_cast<std::size_t>(k)));
  for (int i = 0; i < fm.valid_len; ++i) {
    const std::size_t u = static_cast<std::size_t>(i);
    const double iat = i == 0 ? 0.0 : flow.relative_time[u] - flow.relative_time[u - 1];
    // NaN-safe clipping: anything not inside the range collapses to a bound.
    const double clipped_iat = iat > 0.0 ? std::min(iat, max_iat) : 0.0;
    const double magnitude = std::min(std::abs(flow.signed_length[u]), max_len);
    const double sign = flow.signed_length[u] < 0.0 ? -1.0 : 1.0;
    fm.values(i, 0) = clipped_iat / max_iat;
    fm.values(i, 1) = std::isnan(magnitude) ? 0.0 : sign * magnitude / max_len;
  }
  return fm;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

constexpr std::string_view kCsvHeader = "ts,src,dst,sport,dport,proto,len,fin";

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line_no, const char* column) {
  T value{};
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw DataFormatError("packet csv line " + std::to_string(line_no) + ": bad " + column + " '" +
                          std::string(field) + "'");
  }
  return value;
}

}  // namespace

PacketLog read_packet_csv(std::istream& in) {
  PacketLog log;
  std::string line;
  if (!std::getline(in, line)) throw DataFormatError("packet csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  bool has_label = false;
  if (line == std::string(kCsvHeader) + ",label") {
    has_label = true;
  } else if (line != kCsvHeader) {
    throw DataFormatError("packet csv: header must be '" + std::string(kCsvHeader) + "[,label]', got '" + line + "'");
  }
  const std::size_t columns = has_label ? 9 : 8;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != columns) {
      throw DataFormatError("packet csv line " + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                            " fields, got " + std::to_string(f.size()));
    }
    PacketRecord p;
    if (f[5] == "tcp") {
      p.protocol = Protocol::kTcp;
    } else if (f[5] == "udp") {
      p.protocol = Protocol::kUdp;
    } else {
      log.diagnostics.push_back("line " + std::to_string(line_no) + ": unsupported protocol '" + std::string(f[5]) +
                                "', record skipped");
      continue;
    }
    p.timestamp = parse_number<double>(f[0], line_no, "ts");
    if (!std::isfinite(p.timestamp) || p.timestamp < 0.0) {
      throw DataFormatError("packet csv line " + std::to_string(line_no) + ": ts must be finite and non-negative");
    }
    p.src = std::string(f[1]);
    p.dst = std::string(f[2]);
    const auto sport = parse_number<unsigned long>(f[3], line_no, "sport");
    const auto dport = parse_number<unsigned long>(f[4], line_no, "dport");
    const auto len = parse_number<unsigned long>(f[6], line_no, "len");
    if (sport > 65535 || dport > 65535 || len > 65535) {
      throw DataFormatError("packet csv line " + std::to_string(line_no) + ": port or length above 65535");
    }
    p.src_port = static_cast<std::uint16_t>(sport);
    p.dst_port = static_cast<std::uint16_t>(dport);
    p.length = static_cast<std::uint32_t>(len);
    if (f[7] != "0" && f[7] != "1") {
      throw DataFormatError("packet csv line " + std::to_string(line_no) + ": fin must be 0 or 1");
    }
    p.tcp_fin = p.protocol == Protocol::kTcp && f[7] == "1";
    if (has_label && !f[8].empty()) {
      const int label = parse_number<int>(f[8], line_no, "label");
      if (label < 1) throw DataFormatError("packet csv line " + std::to_string(line_no) + ": label must be >= 1");
      p.label = label;
    }
    log.packets.push_back(std::move(p));
  }
  return log;
}

PacketLog read_packet_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open packet log '" + path + "'");
  return read_packet_csv(in);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_packet_csv(std::ostream& out, const std::vector<PacketRecord>& packets) {
  const bool with_label =
      std::any_of(packets.begin(), packets.end(), [](const PacketRecord& p) { return p.label.has_value(); });
  out << kCsvHeader << (with_label ? ",label" : "") << '\n';
  for (const PacketRecord& p : packets) {
    out << format_double(p.timestamp) << ',' << p.src << ',' << p.dst << ',' << p.src_port << ',' << p.dst_port << ','
        << to_string(p.protocol) << ',' << p.length << ',' << (p.tcp_fin ? 1 : 0);
    if (with_label) {
      out << ',';
      if (p.label) out << *p.label;
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// JSONL

nlohmann::json flow_to_json(const FlowSample& flow, std::size_t id) {
  nlohmann::json j;
  j["id"] = id;
  j["protocol"] = to_string(flow.protocol);
  j["src"] = flow.src;
  j["dst"] = flow.dst;
  j["sport"] = flow.src_port;
  j["dport"] = flow.dst_port;
  j["first_packet_time"] = flow.first_packet_time;
  j["last_packet_time"] = flow.last_packet_time;
  j["total_bytes"] = flow.total_bytes;
  j["duration"] = flow.duration;
  j["bandwidth"] = flow.bandwidth;
  j["traffic_label"] = flow.traffic_label ? nlohmann::json(*flow.traffic_label) : nlohmann::json();
  j["relative_time"] = flow.relative_time;
  j["signed_length"] = flow.signed_length;
  return j;
}

FlowSample flow_from_json(const nlohmann::json& j) {
  try {
    FlowSample f;
    const auto proto = j.at("protocol").get<std::string>();
    if (proto != "tcp" && proto != "udp") throw DataFormatError("flow json: unsupported protocol '" + proto + "'");
    f.protocol = proto == "tcp" ? Protocol::kTcp : Protocol::kUdp;
    f.src = j.at("src").get<std::string>();
    f.dst = j.at("dst").get<std::string>();
    f.src_port = j.at("sport").get<std::uint16_t>();
    f.dst_port = j.at("dport").get<std::uint16_t>();
    f.first_packet_time = j.at("first_packet_time").get<double>();
    f.last_packet_time = j.at("last_packet_time").get<double>();
    f.total_bytes = j.at("total_bytes").get<double>();
    f.duration = j.at("duration").get<double>();
    f.bandwidth = j.at("bandwidth").get<double>();
    if (!j.at("traffic_label").is_null()) f.traffic_label = j.at("traffic_label").get<int>();
    f.relative_time = j.at("relative_time").get<std::vector<double>>();
    f.signed_length = j.at("signed_length").get<std::vector<double>>();
    if (f.relative_time.empty() || f.relative_time.size() != f.signed_length.size()) {
      throw DataFormatError("flow json: packet arrays empty or of unequal length");
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw DataFormatError(std::string("flow json: ") + e.what());
  }
}

void write_flows_jsonl(std::ostream& out, const std::vector<FlowSample>& flows) {
  for (std::size_t i = 0; i < flows.size(); ++i) out << flow_to_json(flows[i], i).dump() << '\n';
}

std::vector<FlowSample> read_flows_jsonl(std::istream& in) {
  std::vector<FlowSample> flows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataFormatError("flow jsonl line " + std::to_string(line_no) + ": " + e.what());
    }
    flows.push_back(flow_from_json(j));
  }
  return flows;
}

std::vector<FlowSample> read_flows_jsonl_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open flow file '" + path + "'");
  return read_flows_jsonl(in);
}

}  // namespace mtltc
