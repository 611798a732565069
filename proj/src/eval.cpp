// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#include "qrsnap/eval.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "qrsnap/error.hpp"
#include "qrsnap/parallel.hpp"

namespace qrsnap {
namespace {

std::string family_name(const GridPoint& point) {
  return point ? std::string(to_string(point->kind)) : "clean";
}

long level_of(const GridPoint& point) { return point ? std::lround(point->level) : 0; }

Accuracy score(const std::vector<std::vector<double>>& preds, const Dataset& test, std::size_t k) {
  std::size_t hit1 = 0;
  std::size_t hitk = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto ranked = top_k(preds[i], k);
    if (ranked.front() == test.labels[i]) ++hit1;
    if (std::find(ranked.begin(), ranked.end(), test.labels[i]) != ranked.end()) ++hitk;
  }
  const auto n = static_cast<double>(preds.size());
  return {static_cast<double>(hit1) / n, static_cast<double>(hitk) / n};
}

void check_eval_inputs(const Dataset& test, std::size_t k) {
  if (test.size() == 0) throw InvalidArgument("evaluate: empty test set");
  if (k < 1 || k > test.classes()) throw InvalidArgument("evaluate: k must lie in [1, classes]");
}

}  // namespace

void SweepGrid::validate() const {
  for (double s : noise_levels) {
    qrsnap::validate(DistortionSpec{DistortionKind::kGaussianNoise, s});
    if (s != std::round(s)) throw InvalidArgument("sweep noise levels must be integers");
  }
  for (int k : blur_levels) qrsnap::validate(DistortionSpec{DistortionKind::kGaussianBlur, static_cast<double>(k)});
  if (points().empty()) throw InvalidArgument("sweep grid is empty");
}

std::vector<GridPoint> SweepGrid::points() const {
  std::vector<GridPoint> out;
  if (include_clean) out.emplace_back(std::nullopt);
  for (double s : noise_levels) out.emplace_back(DistortionSpec{DistortionKind::kGaussianNoise, s});
  for (int k : blur_levels) out.emplace_back(DistortionSpec{DistortionKind::kGaussianBlur, static_cast<double>(k)});
  return out;
}

RngStream evaluation_stream(std::uint64_t seed, const GridPoint& point, std::size_t index) {
  const std::uint64_t family = point ? static_cast<std::uint64_t>(point->kind) + 1 : 0;
  const std::uint64_t level = point ? std::bit_cast<std::uint64_t>(point->level) : 0;
  return RngStream(seed).split(Purpose::kEval, family).split(Purpose::kEval, level).split(Purpose::kNoise, index);
}

std::vector<Image> distort_test_set(const Dataset& test, const GridPoint& point, std::uint64_t seed) {
  if (!point) return test.images;
  validate(*point);
  std::vector<Image> out(test.size());
  parallel_for(test.size(), [&](std::size_t i) {
    RngStream stream = evaluation_stream(seed, point, i);
    out[i] = distort(test.images[i], *point, stream);
  });
  return out;
}

Accuracy evaluate(const EnsembleModel& model, const Dataset& test, const GridPoint& point,
                  std::size_t k, std::uint64_t seed) {
  check_eval_inputs(test, k);
  const std::vector<Image> images = distort_test_set(test, point, seed);
  return score(predict_ensemble(model, images), test, k);
}

SweepReport sweep(const std::vector<TaggedModel>& models, const Dataset& test, const SweepGrid& grid,
                  std::size_t k, std::uint64_t seed) {
  if (models.empty()) throw InvalidArgument("sweep: no models");
  check_eval_inputs(test, k);
  grid.validate();
  for (const auto& [tag, model] : models) {
    if (tag.empty() || tag.find_first_of(",\r\n") != std::string::npos) {
      throw InvalidArgument("sweep: model tag '" + tag + "' is empty or contains a comma/newline");
    }
  }
  const std::vector<GridPoint> points = grid.points();
  std::vector<std::vector<Accuracy>> table(models.size(), std::vector<Accuracy>(points.size()));
  for (std::size_t p = 0; p < points.size(); ++p) {
    const std::vector<Image> images = distort_test_set(test, points[p], seed);
    for (std::size_t m = 0; m < models.size(); ++m) {
      table[m][p] = score(predict_ensemble(models[m].second, images), test, k);
    }
  }
  SweepReport report;
  report.seed = seed;
  for (std::size_t m = 0; m < models.size(); ++m) {
    for (std::size_t p = 0; p < points.size(); ++p) {
      report.rows.push_back({models[m].first, family_name(points[p]), level_of(points[p]),
                             table[m][p].top1, table[m][p].topk, test.size()});
    }
  }
  return report;
}

void write_sweep_csv(const SweepReport& report, std::ostream& out) {
  out << kSweepCsvHeader << '\n';
  char buf[128];
  for (const SweepRow& r : report.rows) {
    std::snprintf(buf, sizeof buf, ",%s,%ld,%.6f,%.6f,%zu\n", r.family.c_str(), r.level, r.top1, r.topk, r.n);
    out << r.model << buf;
  }
}

std::string sweep_csv(const SweepReport& report) {
  std::ostringstream out;
  write_sweep_csv(report, out);
  return out.str();
}

std::vector<SweepRow> read_sweep_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != kSweepCsvHeader) {
    throw FormatError("line 1: expected header '" + std::string(kSweepCsvHeader) + "'");
  }
  auto bad = [&](const std::string& why) {
    return FormatError("line " + std::to_string(line_no) + ": " + why);
  };
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (f.size() != 6) throw bad("expected 6 fields, found " + std::to_string(f.size()));
    SweepRow r;
    r.model = f[0];
    r.family = f[1];
    if (r.model.empty()) throw bad("empty model tag");
    if (r.family != "clean" && r.family != "noise" && r.family != "blur") {
      throw bad("unknown family '" + r.family + "'");
    }
    auto parse = [&](const std::string& text, auto& value, const char* what) {
      const char* end = text.data() + text.size();
      auto [ptr, ec] = std::from_chars(text.data(), end, value);
      if (ec != std::errc() || ptr != end || text.empty()) throw bad(std::string("bad ") + what + " '" + text + "'");
    };
    parse(f[2], r.level, "level");
    parse(f[3], r.top1, "top1");
    parse(f[4], r.topk, "topk");
    parse(f[5], r.n, "n");
    if (!(r.top1 >= 0.0 && r.top1 <= 1.0 && r.topk >= 0.0 && r.topk <= 1.0)) {
      throw bad("accuracy outside [0, 1]");
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw FormatError("line 2: no data rows after header");
  return rows;
}

}  // namespace qrsnap
