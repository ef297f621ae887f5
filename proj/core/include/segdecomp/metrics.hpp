#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "segdecomp/core.hpp"

namespace segdecomp {

/// counts[i][j]: items with truth labels[i] predicted as labels[j]. For a
/// time-slice matrix an item is one slice of slice_seconds; for a classic
/// matrix (slice_seconds == 0) it is one segment.
struct ConfusionMatrix {
  std::vector<ActivityLabel> labels;
  std::vector<std::uint64_t> counts;
  double slice_seconds = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts[truth * size() + predicted]; }
  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t i) const;
  std::uint64_t col_sum(std::size_t j) const;
  std::size_t index_of(const ActivityLabel& label) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

using TimeSliceConfusionMatrix = ConfusionMatrix;

/// Number of evaluation slices for a span: whole slices plus a trailing
/// partial slice if it is at least half a slice long.
std::uint64_t slice_count(Duration span, Duration slice);

/// Cuts the shared domain into slices and counts (truth, predicted) label
/// pairs sampled at each slice midpoint. `labels` is merged with every label
/// occurring in either track; the result is sorted. Throws
/// std::invalid_argument if the domains differ.
TimeSliceConfusionMatrix ts_confusion(const ActivityTrack& truth, const ActivityTrack& predicted,
                                      double slice_seconds, std::span<const ActivityLabel> labels = {});

struct ClassScore {
  ActivityLabel label;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::uint64_t support = 0;
  std::uint64_t predicted = 0;
};

struct ScoreSummary {
  double macro_f1 = 0;
  double macro_tpr = 0;
  double macro_precision = 0;
  double accuracy = 0;
  double macro_f1_no_other = 0;
  double macro_tpr_no_other = 0;
  double macro_precision_no_other = 0;
  std::vector<ClassScore> per_class;
};

/// One-vs-rest scores per class. Macro averages run over classes with
/// non-zero support; the *_no_other variants also drop Other.
ScoreSummary summarize(const ConfusionMatrix& cm);

struct ClassicResult {
  ConfusionMatrix matrix;
  ScoreSummary summary;
};

/// Per-segment confusion: every segment weighs one regardless of duration.
/// Throws std::invalid_argument on a length mismatch.
ClassicResult classic_confusion(std::span<const ActivityLabel> segment_labels,
                                std::span<const ActivityLabel> segment_predictions);

struct MetricStat {
  double mean = 0;
  double stddev = 0;
  /// "0.50±0.10"
  std::string format() const;
};

std::string format_mean_std(double mean, double stddev);

struct ExpectedPerformance {
  std::size_t n = 0;
  MetricStat macro_f1, macro_tpr, macro_precision, accuracy;
  MetricStat macro_f1_no_other, macro_tpr_no_other;
};

/// Mean and population standard deviation of each metric. Throws
/// std::invalid_argument when `scores` is empty.
ExpectedPerformance expected_performance(std::span<const ScoreSummary> scores);
MetricStat mean_std(std::span<const double> values);

}  // namespace segdecomp
