// Copyright 2026 The dpopt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Experiment config files: `section.key = value` lines (or `[section]` blocks),
// `#` comments, unknown keys rejected.
//
//   objective.kind             cosh | quadratic | logistic
//   objective.dim              int
//   objective.condition_number float (quadratic)
//   objective.n_terms          int (logistic)
//   objective.data_seed        int (logistic)
//   noise.kind                 none | two_point | spherical
//   noise.tau0, noise.tau1     float
//   optimizer.method           nsgd | sgd
//   optimizer.theory           bool
//   optimizer.param            float, r or c
//   optimizer.sigma            float
//   optimizer.lr               float (ignored in theory mode)
//   optimizer.batch_size       int
//   run.steps, run.seed        int
//   run.eval_every             int, 0 = auto
//   run.init                   float
//   run.schedule               constant | step
//   run.milestones             comma list of fractions
//   run.decay_factor           float
//   sweep.lrs, sweep.params    comma lists of floats
//   sweep.seeds                comma list of ints

#ifndef DPOPT_CONFIG_H_
#define DPOPT_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dpopt/harness.h"

namespace dpopt {

struct FileConfig {
  ExperimentConfig experiment;
  std::vector<double> sweep_lrs;
  std::vector<double> sweep_params;
  std::vector<uint64_t> sweep_seeds = {0, 1, 2};
};

absl::StatusOr<FileConfig> ParseConfigText(const std::string& text);
absl::StatusOr<FileConfig> ParseConfigFile(const std::string& path);

}  // namespace dpopt

#endif  // DPOPT_CONFIG_H_
