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
#include <string>
#include <type_traits>

#include "mtltc/nn/network.hpp"

namespace mtltc::nn {

inline constexpr int kCheckpointVersion = 1;

nlohmann::json to_json(const ArchitectureSpec& spec);
ArchitectureSpec architecture_from_json(const nlohmann::json& j);

template <typename Scalar>
constexpr const char* scalar_name() {
  if constexpr (std::is_same_v<Scalar, float>) return "float32";
  else return "float64";
}

/// Serializes layer specs plus every parameter as a flat row-major array.
/// Decimal output uses shortest round-trip formatting, so a reload is
/// bit-exact. `meta` is stored verbatim.
template <typename Scalar>
nlohmann::json checkpoint_to_json(const Network<Scalar>& net, const nlohmann::json& meta = nlohmann::json::object()) {
  nlohmann::json j;
  j["format"] = "mtltc-checkpoint";
  j["version"] = kCheckpointVersion;
  j["scalar"] = scalar_name<Scalar>();
  j["architecture"] = to_json(net.spec());
  nlohmann::json params = nlohmann::json::array();
  for (const Param<Scalar>* p : net.params()) {
    nlohmann::json values = nlohmann::json::array();
    for (Index i = 0; i < p->value.size(); ++i) values.push_back(static_cast<double>(p->value.data()[i]));
    params.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}, {"values", std::move(values)}});
  }
  j["params"] = std::move(params);
  j["meta"] = meta;
  return j;
}

template <typename Scalar>
Network<Scalar> network_from_checkpoint(const nlohmann::json& j) {
  if (j.value("format", "") != "mtltc-checkpoint") throw DataFormatError("checkpoint: missing format tag");
  if (j.value("version", 0) != kCheckpointVersion) {
    throw DataFormatError("checkpoint: unsupported version " + j.value("version", nlohmann::json()).dump());
  }
  if (j.value("scalar", "") != scalar_name<Scalar>()) {
    throw DataFormatError("checkpoint: scalar type " + j.value("scalar", std::string("?")) + ", expected " +
                          scalar_name<Scalar>());
  }
  Network<Scalar> net(architecture_from_json(j.at("architecture")), 0);
  const auto& stored = j.at("params");
  auto params = net.params();
  if (stored.size() != params.size()) throw DataFormatError("checkpoint: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param<Scalar>& p = *params[i];
    const auto& s = stored[i];
    if (s.at("name").get<std::string>() != p.name || s.at("rows").get<Index>() != p.value.rows() ||
        s.at("cols").get<Index>() != p.value.cols()) {
      throw DataFormatError("checkpoint: parameter " + std::to_string(i) + " does not match " + p.name);
    }
    const auto& values = s.at("values");
    if (static_cast<Index>(values.size()) != p.value.size()) {
      throw DataFormatError("checkpoint: wrong value count for " + p.name);
    }
    for (Index k = 0; k < p.value.size(); ++k) {
      p.value.data()[k] = static_cast<Scalar>(values[static_cast<std::size_t>(k)].get<double>());
    }
  }
  return net;
}

}  // namespace mtltc::nn
