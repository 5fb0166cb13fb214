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

#include "dpopt/random.h"

namespace dpopt {

Rng MakeRng(uint64_t seed, uint64_t stream_id) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(stream_id),
                    static_cast<uint32_t>(stream_id >> 32), 0x6470u};
  return Rng(seq);
}

Vector GaussianVector(int dim, double stddev, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(dim);
  for (int j = 0; j < dim; ++j) v[j] = stddev * normal(rng);
  return v;
}

Vector UniformDirection(int dim, Rng& rng) {
  Vector v = GaussianVector(dim, 1.0, rng);
  double norm = v.norm();
  // Rejection on the measure-zero event of an (almost) zero draw.
  while (norm < 1e-300) {
    v = GaussianVector(dim, 1.0, rng);
    norm = v.norm();
  }
  return v / norm;
}

}  // namespace dpopt
