#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rgbdfuse/image.h"

namespace rgbdfuse {

struct MetricsReport {
  double accuracy = 0.0;
  // Empty for classes with no test samples.
  std::vector<std::optional<double>> per_class_recall;
  // confusion[true][predicted]
  std::vector<std::vector<std::size_t>> confusion;

  std::size_t total() const;
  std::size_t correct() const;
};

// Throws kEmptyTestSet when there are no samples, kShapeMismatch when the
// inputs disagree in length or a label is out of range.
MetricsReport ComputeMetrics(std::span<const int> truth,
                             std::span<const int> predicted, int num_classes);

MetricsReport MetricsFromConfusion(
    std::vector<std::vector<std::size_t>> confusion);

// class,name,support,correct,recall rows followed by an "overall" row with the
// accuracy. Undefined recalls are written as "undefined".
void WriteMetricsCsv(const MetricsReport& report,
                     std::span<const std::string> class_names,
                     const std::filesystem::path& path);
// Reads back the confusion matrix written by WriteConfusionCsv.
MetricsReport ReadConfusionCsv(const std::filesystem::path& path);
void WriteConfusionCsv(const MetricsReport& report,
                       const std::filesystem::path& path);

// Simple bar chart of per-class recall (undefined classes drawn as a gray
// stub).
EncodedImage RenderRecallChart(const MetricsReport& report, int bar_width = 24,
                               int height = 200);

}  // namespace rgbdfuse
