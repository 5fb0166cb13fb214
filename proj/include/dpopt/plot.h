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

// Minimal SVG line charts and heatmaps.

#ifndef DPOPT_PLOT_H_
#define DPOPT_PLOT_H_

#include <string>
#include <vector>

#include "absl/status/status.h"

namespace dpopt {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartLabels {
  std::string title;
  std::string x_label;
  std::string y_label;
};

// Non-positive points are skipped on log axes.
absl::Status WriteLineChartSvg(const std::vector<Series>& series,
                               const ChartLabels& labels, bool log_x,
                               bool log_y, const std::string& path);

// One <rect class="cell"> per matrix entry, colored on a log scale.
// matrix[i][j] is drawn in row i (row_labels[i]) and column j.
absl::Status WriteHeatmapSvg(const std::vector<std::vector<double>>& matrix,
                             const std::vector<std::string>& row_labels,
                             const std::vector<std::string>& col_labels,
                             const ChartLabels& labels,
                             const std::string& path);

}  // namespace dpopt

#endif  // DPOPT_PLOT_H_
