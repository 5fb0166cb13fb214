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

#ifndef DPOPT_RANDOM_H_
#define DPOPT_RANDOM_H_

#include <cstdint>
#include <random>

#include "Eigen/Core"

namespace dpopt {

using Rng = std::mt19937_64;
using Vector = Eigen::VectorXd;

// Independent, reproducible stream for (seed, stream_id). Workers that draw in
// parallel each take their own stream id.
Rng MakeRng(uint64_t seed, uint64_t stream_id = 0);

// d i.i.d. N(0, stddev^2) coordinates drawn in index order.
Vector GaussianVector(int dim, double stddev, Rng& rng);

// Uniformly distributed unit vector in R^dim.
Vector UniformDirection(int dim, Rng& rng);

}  // namespace dpopt

#endif  // DPOPT_RANDOM_H_
