// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#include "qrsnap/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>

#include "qrsnap/error.hpp"

namespace qrsnap {
namespace {

constexpr double kChartW = 480;
constexpr double kChartH = 320;
constexpr double kLeft = 60;
constexpr double kRight = 130;
constexpr double kTop = 40;
constexpr double kBottom = 50;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string render_sweep_svg(const std::vector<SweepRow>& rows) {
  std::vector<std::string> models;
  std::vector<std::string> families;
  for (const SweepRow& r : rows) {
    if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
    if (r.family != "clean" && std::find(families.begin(), families.end(), r.family) == families.end()) {
      families.push_back(r.family);
    }
  }
  if (families.empty()) throw FormatError("sweep has no distortion rows to plot");

  const double width = kChartW * static_cast<double>(families.size());
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(width)
      << "\" height=\"" << num(kChartH) << "\" viewBox=\"0 0 " << num(width) << " " << num(kChartH)
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\"" << num(kChartH)
      << "\" fill=\"white\"/>\n";

  for (std::size_t f = 0; f < families.size(); ++f) {
    const std::string& family = families[f];
    const double ox = kChartW * static_cast<double>(f);
    const double plot_w = kChartW - kLeft - kRight;
    const double plot_h = kChartH - kTop - kBottom;
    long lo = 0;
    long hi = 0;
    bool first = true;
    for (const SweepRow& r : rows) {
      if (r.family != family) continue;
      lo = first ? r.level : std::min(lo, r.level);
      hi = first ? r.level : std::max(hi, r.level);
      first = false;
    }
    const double span = hi > lo ? static_cast<double>(hi - lo) : 1.0;
    auto px = [&](long level) { return ox + kLeft + plot_w * static_cast<double>(level - lo) / span; };
    auto py = [&](double acc) { return kTop + plot_h * (1.0 - acc); };

    svg << "<g id=\"chart-" << escape(family) << "\">\n";
    svg << "<text x=\"" << num(ox + kLeft + plot_w / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
        << "Accuracy (%) vs " << (family == "noise" ? "noise sigma" : "blur kernel size") << "</text>\n";
    // Axes and gridlines.
    for (int pct = 0; pct <= 100; pct += 20) {
      const double y = py(pct / 100.0);
      svg << "<line x1=\"" << num(ox + kLeft) << "\" y1=\"" << num(y) << "\" x2=\"" << num(ox + kLeft + plot_w)
          << "\" y2=\"" << num(y) << "\" stroke=\"#dddddd\"/>\n";
      svg << "<text x=\"" << num(ox + kLeft - 6) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << pct
          << "</text>\n";
    }
    std::vector<long> ticks;
    for (const SweepRow& r : rows) {
      if (r.family == family && std::find(ticks.begin(), ticks.end(), r.level) == ticks.end()) {
        ticks.push_back(r.level);
      }
    }
    for (long t : ticks) {
      svg << "<text x=\"" << num(px(t)) << "\" y=\"" << num(kTop + plot_h + 16) << "\" text-anchor=\"middle\">" << t
          << "</text>\n";
    }
    svg << "<line x1=\"" << num(ox + kLeft) << "\" y1=\"" << num(kTop + plot_h) << "\" x2=\"" << num(ox + kLeft + plot_w)
        << "\" y2=\"" << num(kTop + plot_h) << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << num(ox + kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(ox + kLeft)
        << "\" y2=\"" << num(kTop + plot_h) << "\" stroke=\"black\"/>\n";

    for (std::size_t m = 0; m < models.size(); ++m) {
      const char* color = kPalette[m % std::size(kPalette)];
      std::vector<std::pair<long, double>> pts;
      std::optional<double> clean;
      for (const SweepRow& r : rows) {
        if (r.model != models[m]) continue;
        if (r.family == family) pts.emplace_back(r.level, r.top1);
        if (r.family == "clean") clean = r.top1;
      }
      std::sort(pts.begin(), pts.end());
      if (clean) {
        svg << "<line x1=\"" << num(ox + kLeft) << "\" y1=\"" << num(py(*clean)) << "\" x2=\""
            << num(ox + kLeft + plot_w) << "\" y2=\"" << num(py(*clean)) << "\" stroke=\"" << color
            << "\" stroke-dasharray=\"4 3\" stroke-width=\"1\"/>\n";
      }
      if (!pts.empty()) {
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) {
          svg << (i ? " " : "") << num(px(pts[i].first)) << "," << num(py(pts[i].second));
        }
        svg << "\"/>\n";
      }
      const double ly = kTop + 14.0 * static_cast<double>(m);
      svg << "<text x=\"" << num(ox + kLeft + plot_w + 10) << "\" y=\"" << num(ly + 4) << "\" fill=\"" << color
          << "\">" << escape(models[m]) << "</text>\n";
    }
    svg << "</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace qrsnap
