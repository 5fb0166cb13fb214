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

#include "dpopt/config.h"

#include <fstream>
#include <sstream>

#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "boost/program_options.hpp"

namespace dpopt {
namespace {

namespace po = boost::program_options;

template <typename T>
absl::StatusOr<std::vector<T>> ParseList(const std::string& key,
                                         const std::string& text) {
  std::vector<T> out;
  for (absl::string_view piece : absl::StrSplit(text, ',', absl::SkipWhitespace())) {
    piece = absl::StripAsciiWhitespace(piece);
    T value;
    bool ok;
    if constexpr (std::is_floating_point_v<T>) {
      ok = absl::SimpleAtod(piece, &value);
    } else {
      ok = absl::SimpleAtoi(piece, &value);
    }
    if (!ok) {
      return absl::InvalidArgumentError(
          absl::StrCat(key, ": cannot parse '", piece, "'"));
    }
    out.push_back(value);
  }
  return out;
}

}  // namespace

absl::StatusOr<FileConfig> ParseConfigText(const std::string& text) {
  FileConfig out;
  ExperimentConfig& e = out.experiment;
  std::string objective_kind = e.objective.kind;
  std::string noise_kind = "none";
  std::string method = "nsgd";
  std::string schedule = "constant";
  std::string milestones, lrs, params, seeds;
  po::options_description desc;
  // clang-format off
  desc.add_options()
      ("objective.kind", po::value(&objective_kind))
      ("objective.dim", po::value(&e.objective.dim))
      ("objective.condition_number", po::value(&e.objective.condition_number))
      ("objective.n_terms", po::value(&e.objective.n_terms))
      ("objective.data_seed", po::value(&e.objective.data_seed))
      ("noise.kind", po::value(&noise_kind))
      ("noise.tau0", po::value(&e.noise.variance.tau0))
      ("noise.tau1", po::value(&e.noise.variance.tau1))
      ("optimizer.method", po::value(&method))
      ("optimizer.theory", po::value(&e.optimizer.theory))
      ("optimizer.param", po::value(&e.optimizer.param))
      ("optimizer.sigma", po::value(&e.optimizer.sigma))
      ("optimizer.lr", po::value(&e.optimizer.lr))
      ("optimizer.batch_size", po::value(&e.optimizer.batch_size))
      ("run.steps", po::value(&e.steps))
      ("run.seed", po::value(&e.seed))
      ("run.eval_every", po::value(&e.eval_every))
      ("run.init", po::value(&e.init))
      ("run.schedule", po::value(&schedule))
      ("run.milestones", po::value(&milestones))
      ("run.decay_factor", po::value(&e.schedule.factor))
      ("sweep.lrs", po::value(&lrs))
      ("sweep.params", po::value(&params))
      ("sweep.seeds", po::value(&seeds));
  // clang-format on
  try {
    std::istringstream in(text);
    po::variables_map vm;
    po::store(po::parse_config_file(in, desc, /*allow_unregistered=*/false), vm);
    po::notify(vm);
  } catch (const po::error& err) {
    return absl::InvalidArgumentError(absl::StrCat("config: ", err.what()));
  }

  e.objective.kind = objective_kind;
  if (noise_kind == "none") {
    e.noise.kind = NoiseKind::kNone;
  } else if (noise_kind == "two_point") {
    e.noise.kind = NoiseKind::kTwoPointRadial;
  } else if (noise_kind == "spherical") {
    e.noise.kind = NoiseKind::kSphericalBounded;
  } else {
    return absl::InvalidArgumentError(
        absl::StrCat("noise.kind: unknown value '", noise_kind, "'"));
  }
  if (method == "nsgd") {
    e.optimizer.method = Method::kNsgd;
  } else if (method == "sgd") {
    e.optimizer.method = Method::kSgd;
  } else {
    return absl::InvalidArgumentError(
        absl::StrCat("optimizer.method: unknown value '", method, "'"));
  }
  if (schedule == "constant") {
    e.schedule.kind = Schedule::kConstant;
  } else if (schedule == "step") {
    e.schedule.kind = Schedule::kStepDecay;
  } else {
    return absl::InvalidArgumentError(
        absl::StrCat("run.schedule: unknown value '", schedule, "'"));
  }
  absl::StatusOr<std::vector<double>> m =
      ParseList<double>("run.milestones", milestones);
  if (!m.ok()) return m.status();
  e.schedule.milestones = *std::move(m);
  absl::StatusOr<std::vector<double>> l = ParseList<double>("sweep.lrs", lrs);
  if (!l.ok()) return l.status();
  out.sweep_lrs = *std::move(l);
  absl::StatusOr<std::vector<double>> p =
      ParseList<double>("sweep.params", params);
  if (!p.ok()) return p.status();
  out.sweep_params = *std::move(p);
  if (!seeds.empty()) {
    absl::StatusOr<std::vector<uint64_t>> s =
        ParseList<uint64_t>("sweep.seeds", seeds);
    if (!s.ok()) return s.status();
    out.sweep_seeds = *std::move(s);
  }
  if (absl::Status s = ValidateExperiment(e); !s.ok()) return s;
  return out;
}

absl::StatusOr<FileConfig> ParseConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::ostringstream text;
  text << in.rdbuf();
  return ParseConfigText(text.str());
}

}  // namespace dpopt
