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


#include "mtltc/nn/checkpoint.hpp"

namespace mtltc::nn {

nlohmann::json to_json(const ArchitectureSpec& spec) {
  nlohmann::json trunk = nlohmann::json::array();
  for (const LayerSpec& l : spec.trunk) {
    trunk.push_back({{"kind", to_string(l.kind)}, {"units", l.units}, {"kernel", l.kernel}});
  }
  return {{"input_length", spec.input_length},
          {"input_channels", spec.input_channels},
          {"trunk", std::move(trunk)},
          {"heads", spec.heads}};
}

ArchitectureSpec architecture_from_json(const nlohmann::json& j) {
  try {
    ArchitectureSpec spec;
    spec.input_length = j.at("input_length").get<int>();
    spec.input_channels = j.at("input_channels").get<int>();
    for (const auto& l : j.at("trunk")) {
      spec.trunk.push_back({layer_kind_from_string(l.at("kind").get<std::string>()), l.at("units").get<int>(),
                            l.at("kernel").get<int>()});
    }
    spec.heads = j.at("heads").get<std::vector<int>>();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw DataFormatError(std::string("architecture: ") + e.what());
  }
}

}  // namespace mtltc::nn
