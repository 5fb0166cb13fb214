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

#include "dpopt/plot.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_replace.h"

namespace dpopt {
namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 420;
constexpr double kLeft = 80;
constexpr double kRight = 160;
constexpr double kTop = 40;
constexpr double kBottom = 60;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#ff7f0e", "#9467bd", "#8c564b"};

std::string Escape(const std::string& s) {
  return absl::StrReplaceAll(s, {{"&", "&amp;"},
                                 {"<", "&lt;"},
                                 {">", "&gt;"},
                                 {"\"", "&quot;"}});
}

std::string Header(const ChartLabels& labels) {
  return absl::StrFormat(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" "
      "height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\" font-family=\"sans-serif\" "
      "font-size=\"12\">\n"
      "<rect width=\"100%%\" height=\"100%%\" fill=\"white\"/>\n"
      "<text x=\"%.1f\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">%s"
      "</text>\n"
      "<text class=\"x-label\" x=\"%.1f\" y=\"%.1f\" "
      "text-anchor=\"middle\">%s</text>\n"
      "<text class=\"y-label\" x=\"18\" y=\"%.1f\" text-anchor=\"middle\" "
      "transform=\"rotate(-90 18 %.1f)\">%s</text>\n",
      kWidth, kHeight, kWidth, kHeight, kWidth / 2, Escape(labels.title),
      kLeft + (kWidth - kLeft - kRight) / 2, kHeight - 15,
      Escape(labels.x_label), kTop + (kHeight - kTop - kBottom) / 2,
      kTop + (kHeight - kTop - kBottom) / 2, Escape(labels.y_label));
}

absl::Status WriteFile(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) return absl::UnavailableError(absl::StrCat("cannot open ", path));
  out << body;
  out.close();
  if (!out) return absl::DataLossError(absl::StrCat("write failed: ", path));
  return absl::OkStatus();
}

struct Axis {
  double lo = 0;
  double hi = 1;
  bool log = false;

  double Map(double v, double pix_lo, double pix_hi) const {
    double t = log ? (std::log10(v) - lo) / (hi - lo) : (v - lo) / (hi - lo);
    return pix_lo + t * (pix_hi - pix_lo);
  }
  double TickValue(int i, int n) const {
    double t = lo + (hi - lo) * i / n;
    return log ? std::pow(10.0, t) : t;
  }
};

Axis FitAxis(const std::vector<double>& values, bool log) {
  Axis axis;
  axis.log = log;
  double lo = INFINITY, hi = -INFINITY;
  for (double v : values) {
    if (!std::isfinite(v) || (log && v <= 0)) continue;
    double t = log ? std::log10(v) : v;
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
  axis.lo = lo;
  axis.hi = hi;
  return axis;
}

// Log-scale white-to-blue ramp.
std::string CellColor(double v, double lo, double hi) {
  if (!std::isfinite(v) || v <= 0) return "#999999";
  double t = hi > lo ? (std::log10(v) - lo) / (hi - lo) : 0.5;
  t = std::clamp(t, 0.0, 1.0);
  int r = static_cast<int>(std::lround(247 - t * (247 - 8)));
  int g = static_cast<int>(std::lround(251 - t * (251 - 48)));
  int b = static_cast<int>(std::lround(255 - t * (255 - 107)));
  return absl::StrFormat("#%02x%02x%02x", r, g, b);
}

}  // namespace

absl::Status WriteLineChartSvg(const std::vector<Series>& series,
                               const ChartLabels& labels, bool log_x,
                               bool log_y, const std::string& path) {
  std::vector<double> xs, ys;
  for (const Series& s : series) {
    if (s.x.size() != s.y.size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("series ", s.label, " has mismatched x and y"));
    }
    xs.insert(xs.end(), s.x.begin(), s.x.end());
    ys.insert(ys.end(), s.y.begin(), s.y.end());
  }
  const Axis ax = FitAxis(xs, log_x);
  const Axis ay = FitAxis(ys, log_y);
  const double x0 = kLeft, x1 = kWidth - kRight;
  const double y0 = kHeight - kBottom, y1 = kTop;
  std::ostringstream svg;
  svg << Header(labels);
  svg << absl::StrFormat(
      "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" "
      "fill=\"none\" stroke=\"black\"/>\n",
      x0, y1, x1 - x0, y0 - y1);
  constexpr int kTicks = 4;
  for (int i = 0; i <= kTicks; ++i) {
    double vx = ax.TickValue(i, kTicks), vy = ay.TickValue(i, kTicks);
    double px = ax.Map(vx, x0, x1), py = ay.Map(vy, y0, y1);
    svg << absl::StrFormat(
        "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%.3g</text>\n", px,
        y0 + 16, vx);
    svg << absl::StrFormat(
        "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.3g</text>\n", x0 - 6,
        py + 4, vy);
  }
  for (size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    std::string points;
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if ((log_x && s.x[i] <= 0) || (log_y && s.y[i] <= 0)) continue;
      absl::StrAppendFormat(&points, "%.2f,%.2f ", ax.Map(s.x[i], x0, x1),
                            ay.Map(s.y[i], y0, y1));
    }
    svg << absl::StrFormat(
        "<polyline class=\"series\" fill=\"none\" stroke=\"%s\" "
        "stroke-width=\"1.5\" points=\"%s\"/>\n",
        color, points);
    svg << absl::StrFormat(
        "<text x=\"%.1f\" y=\"%.1f\" fill=\"%s\">%s</text>\n", x1 + 10,
        y1 + 16 + 18 * k, color, Escape(s.label));
  }
  svg << "</svg>\n";
  return WriteFile(path, svg.str());
}

absl::Status WriteHeatmapSvg(const std::vector<std::vector<double>>& matrix,
                             const std::vector<std::string>& row_labels,
                             const std::vector<std::string>& col_labels,
                             const ChartLabels& labels,
                             const std::string& path) {
  if (matrix.empty() || matrix.size() != row_labels.size()) {
    return absl::InvalidArgumentError("heatmap rows and labels differ");
  }
  for (const auto& row : matrix) {
    if (row.size() != col_labels.size()) {
      return absl::InvalidArgumentError("heatmap columns and labels differ");
    }
  }
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& row : matrix) {
    for (double v : row) {
      if (!std::isfinite(v) || v <= 0) continue;
      lo = std::min(lo, std::log10(v));
      hi = std::max(hi, std::log10(v));
    }
  }
  const double x0 = kLeft, x1 = kWidth - kRight;
  const double y0 = kTop, y1 = kHeight - kBottom;
  const double cw = (x1 - x0) / col_labels.size();
  const double ch = (y1 - y0) / row_labels.size();
  std::ostringstream svg;
  svg << Header(labels);
  for (size_t i = 0; i < matrix.size(); ++i) {
    for (size_t j = 0; j < matrix[i].size(); ++j) {
      double v = matrix[i][j];
      double cx = x0 + j * cw, cy = y0 + i * ch;
      svg << absl::StrFormat(
          "<rect class=\"cell\" x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" "
          "height=\"%.1f\" fill=\"%s\" stroke=\"white\"/>\n",
          cx, cy, cw, ch, CellColor(v, lo, hi));
      svg << absl::StrFormat(
          "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" "
          "font-size=\"10\">%.3g</text>\n",
          cx + cw / 2, cy + ch / 2 + 4, v);
    }
    svg << absl::StrFormat(
        "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%s</text>\n", x0 - 6,
        y0 + i * ch + ch / 2 + 4, Escape(row_labels[i]));
  }
  for (size_t j = 0; j < col_labels.size(); ++j) {
    svg << absl::StrFormat(
        "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%s</text>\n",
        x0 + j * cw + cw / 2, y1 + 16, Escape(col_labels[j]));
  }
  svg << "</svg>\n";
  return WriteFile(path, svg.str());
}

}  // namespace dpopt
