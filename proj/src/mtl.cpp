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


#include "mtltc/mtl.hpp"

#include "mtltc/fingerprint.hpp"

namespace mtltc {

nn::ArchitectureSpec flow_cnn_architecture(int k, std::vector<int> heads, TrunkVariant variant) {
  using nn::LayerSpec;
  const bool reduced = variant == TrunkVariant::kReduced || (variant == TrunkVariant::kAuto && uses_reduced_trunk(k));
  nn::ArchitectureSpec spec;
  spec.input_length = k;
  spec.input_channels = 2;
  for (int filters : {32, 64, 128}) {
    const int convs = (reduced && filters == 128) ? 1 : 2;
    for (int c = 0; c < convs; ++c) {
      spec.trunk.push_back(LayerSpec::conv(filters, 3));
      spec.trunk.push_back(LayerSpec::relu());
    }
    spec.trunk.push_back(LayerSpec::pool());
  }
  spec.trunk.push_back(LayerSpec::flatten());
  for (int i = 0; i < 2; ++i) {
    spec.trunk.push_back(LayerSpec::dense(256));
    spec.trunk.push_back(LayerSpec::relu());
  }
  spec.heads = std::move(heads);
  nn::trace_shapes(spec);
  return spec;
}

nn::ArchitectureSpec tiny_architecture(int k, std::vector<int> heads) {
  using nn::LayerSpec;
  nn::ArchitectureSpec spec;
  spec.input_length = k;
  spec.input_channels = 2;
  spec.trunk = {LayerSpec::conv(4), LayerSpec::relu(), LayerSpec::pool(),
                LayerSpec::conv(8), LayerSpec::relu(), LayerSpec::conv(16),
                LayerSpec::relu(), LayerSpec::flatten(), LayerSpec::dense(16),
                LayerSpec::relu()};
  spec.heads = std::move(heads);
  nn::trace_shapes(spec);
  return spec;
}

std::uint64_t fingerprint(const LabeledDataset& data) {
  Fnv1a h;
  h.value(static_cast<std::uint64_t>(data.size()));
  h.value(data.n_bw);
  h.value(data.n_dur);
  h.value(data.n_traffic);
  for (const FeatureMatrix& f : data.features) {
    h.value(f.valid_len);
    h.value(static_cast<std::int64_t>(f.values.rows()));
    h.bytes(f.values.data(), static_cast<std::size_t>(f.values.size()) * sizeof(double));
  }
  for (const TaskLabels& l : data.labels) {
    h.value(l.y_bw);
    h.value(l.y_dur);
    h.value(l.y_traffic.value_or(0));
    h.value(l.traffic_mask);
  }
  return h.state;
}

LabeledDataset subset(const LabeledDataset& data, std::span<const std::size_t> indices) {
  LabeledDataset out;
  out.n_bw = data.n_bw;
  out.n_dur = data.n_dur;
  out.n_traffic = data.n_traffic;
  for (std::size_t i : indices) {
    out.features.push_back(data.features.at(i));
    out.labels.push_back(data.labels.at(i));
  }
  return out;
}

}  // namespace mtltc
