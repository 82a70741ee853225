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


#include "mtltc/baselines.hpp"

namespace mtltc {

const char* to_string(Task t) {
  switch (t) {
    case Task::kBandwidth: return "bw";
    case Task::kDuration: return "dur";
    case Task::kTraffic: return "traffic";
  }
  return "unknown";
}

Task task_from_string(const std::string& name) {
  if (name == "bw" || name == "bandwidth") return Task::kBandwidth;
  if (name == "dur" || name == "duration") return Task::kDuration;
  if (name == "traffic") return Task::kTraffic;
  throw UsageError("unknown task '" + name + "' (expected bw, dur or traffic)");
}

}  // namespace mtltc
