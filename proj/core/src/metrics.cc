#include "rgbdfuse/metrics.h"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rgbdfuse/error.h"

namespace rgbdfuse {

std::size_t MetricsReport::total() const {
  std::size_t n = 0;
  for (const auto& row : confusion) {
    for (auto v : row) n += v;
  }
  return n;
}

std::size_t MetricsReport::correct() const {
  std::size_t n = 0;
  for (std::size_t k = 0; k < confusion.size(); ++k) n += confusion[k][k];
  return n;
}

MetricsReport MetricsFromConfusion(
    std::vector<std::vector<std::size_t>> confusion) {
  MetricsReport r;
  r.confusion = std::move(confusion);
  const std::size_t m = r.confusion.size();
  for (const auto& row : r.confusion) {
    if (row.size() != m) {
      throw Error(ErrorCode::kShapeMismatch, "confusion matrix is not square");
    }
  }
  const std::size_t total = r.total();
  if (total == 0) throw Error(ErrorCode::kEmptyTestSet, "no test samples");
  for (std::size_t k = 0; k < m; ++k) {
    std::size_t support = 0;
    for (auto v : r.confusion[k]) support += v;
    if (support == 0) {
      r.per_class_recall.emplace_back(std::nullopt);
    } else {
      r.per_class_recall.emplace_back(static_cast<double>(r.confusion[k][k]) /
                                      static_cast<double>(support));
    }
  }
  r.accuracy = static_cast<double>(r.correct()) / static_cast<double>(total);
  return r;
}

MetricsReport ComputeMetrics(std::span<const int> truth,
                             std::span<const int> predicted, int num_classes) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "truth and prediction counts differ");
  }
  if (truth.empty()) throw Error(ErrorCode::kEmptyTestSet, "no test samples");
  std::vector<std::vector<std::size_t>> confusion(
      num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= num_classes || predicted[i] < 0 ||
        predicted[i] >= num_classes) {
      throw Error(ErrorCode::kShapeMismatch, "label out of range");
    }
    ++confusion[truth[i]][predicted[i]];
  }
  return MetricsFromConfusion(std::move(confusion));
}

void WriteMetricsCsv(const MetricsReport& report,
                     std::span<const std::string> class_names,
                     const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  os << "class,name,support,correct,recall\n";
  char buf[64];
  for (std::size_t k = 0; k < report.confusion.size(); ++k) {
    std::size_t support = 0;
    for (auto v : report.confusion[k]) support += v;
    os << k << ',' << (k < class_names.size() ? class_names[k] : "") << ','
       << support << ',' << report.confusion[k][k] << ',';
    if (report.per_class_recall[k]) {
      std::snprintf(buf, sizeof(buf), "%.6f", *report.per_class_recall[k]);
      os << buf;
    } else {
      os << "undefined";
    }
    os << '\n';
  }
  std::snprintf(buf, sizeof(buf), "%.6f", report.accuracy);
  os << "overall,," << report.total() << ',' << report.correct() << ',' << buf
     << '\n';
}

void WriteConfusionCsv(const MetricsReport& report,
                       const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  const std::size_t m = report.confusion.size();
  os << "true\\pred";
  for (std::size_t k = 0; k < m; ++k) os << ',' << k;
  os << '\n';
  for (std::size_t i = 0; i < m; ++i) {
    os << i;
    for (std::size_t j = 0; j < m; ++j) os << ',' << report.confusion[i][j];
    os << '\n';
  }
}

MetricsReport ReadConfusionCsv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::string line;
  std::getline(is, line);  // header
  std::vector<std::vector<std::size_t>> confusion;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');  // row label
    std::vector<std::size_t> row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stoull(cell));
      } catch (const std::exception&) {
        throw Error(ErrorCode::kFormat, "bad confusion cell '" + cell + "'");
      }
    }
    confusion.push_back(std::move(row));
  }
  return MetricsFromConfusion(std::move(confusion));
}

EncodedImage RenderRecallChart(const MetricsReport& report, int bar_width,
                               int height) {
  const int m = static_cast<int>(report.per_class_recall.size());
  const int gap = std::max(2, bar_width / 4);
  const int width = std::max(1, m * (bar_width + gap) + gap);
  EncodedImage img(width, height);
  std::fill(img.values.begin(), img.values.end(), std::uint8_t{255});
  for (int k = 0; k < m; ++k) {
    const auto& recall = report.per_class_recall[k];
    const int bar_h = recall ? static_cast<int>(*recall * (height - 1) + 0.5)
                             : std::max(1, height / 50);
    const std::array<std::uint8_t, 3> color =
        recall ? std::array<std::uint8_t, 3>{40, 90, 200}
               : std::array<std::uint8_t, 3>{160, 160, 160};
    const int x0 = gap + k * (bar_width + gap);
    for (int y = height - bar_h; y < height; ++y) {
      for (int x = x0; x < x0 + bar_width; ++x) {
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = color[c];
      }
    }
  }
  return img;
}

}  // namespace rgbdfuse
