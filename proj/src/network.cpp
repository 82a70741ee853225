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


#include "mtltc/nn/network.hpp"

#include <array>
#include <utility>

namespace mtltc::nn {

namespace {

constexpr std::array<std::pair<LayerKind, const char*>, 6> kKindNames{{
    {LayerKind::kConv1D, "conv1d"},
    {LayerKind::kMaxPool1D, "maxpool1d"},
    {LayerKind::kDense, "dense"},
    {LayerKind::kReLU, "relu"},
    {LayerKind::kFlatten, "flatten"},
    {LayerKind::kSoftmax, "softmax"},
}};

}  // namespace

const char* to_string(LayerKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

LayerKind layer_kind_from_string(const std::string& name) {
  for (const auto& [k, n] : kKindNames) {
    if (name == n) return k;
  }
  throw DataFormatError("unknown layer kind '" + name + "'");
}

ShapeTrace trace_shapes(const ArchitectureSpec& spec) {
  if (spec.input_length < 1 || spec.input_channels < 1) {
    throw ShapeError("architecture: input must be at least 1x1");
  }
  ShapeTrace trace;
  int length = spec.input_length;
  int channels = spec.input_channels;
  bool flat = false;
  for (std::size_t i = 0; i < spec.trunk.size(); ++i) {
    const LayerSpec& ls = spec.trunk[i];
    const std::string where = "layer " + std::to_string(i) + " (" + to_string(ls.kind) + ")";
    switch (ls.kind) {
      case LayerKind::kConv1D:
        if (flat) throw ShapeError("architecture: " + where + " after flatten");
        if (ls.units < 1 || ls.kernel < 1) throw ShapeError("architecture: " + where + " needs filters and kernel");
        if (length - ls.kernel + 1 <= 0) {
          throw ShapeError("architecture: " + where + " reduces the input to a zero-dimensional vector (length " +
                           std::to_string(length) + " < kernel " + std::to_string(ls.kernel) + ")");
        }
        length = length - ls.kernel + 1;
        channels = ls.units;
        break;
      case LayerKind::kMaxPool1D:
        if (flat) throw ShapeError("architecture: " + where + " after flatten");
        if (length / 2 == 0) {
          throw ShapeError("architecture: " + where + " reduces the input to a zero-dimensional vector (length " +
                           std::to_string(length) + ")");
        }
        length /= 2;
        break;
      case LayerKind::kReLU:
        break;
      case LayerKind::kFlatten:
        if (flat) throw ShapeError("architecture: " + where + " flattens twice");
        channels *= length;
        trace.flatten_width = channels;
        length = 1;
        flat = true;
        break;
      case LayerKind::kDense:
        if (!flat) throw ShapeError("architecture: " + where + " before flatten");
        if (ls.units < 1) throw ShapeError("architecture: " + where + " needs neurons");
        channels = ls.units;
        break;
      case LayerKind::kSoftmax:
        throw ShapeError("architecture: softmax belongs to heads, not the trunk");
    }
    trace.lengths.push_back(length);
  }
  if (!flat) throw ShapeError("architecture: trunk must flatten before the heads");
  for (int classes : spec.heads) {
    if (classes < 2) throw ShapeError("architecture: every head needs at least 2 classes");
  }
  trace.output_width = channels;
  return trace;
}

}  // namespace mtltc::nn
