#include "segdecomp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace segdecomp {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t i) const {
  std::uint64_t n = 0;
  for (std::size_t j = 0; j < size(); ++j) n += at(i, j);
  return n;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t j) const {
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < size(); ++i) n += at(i, j);
  return n;
}

std::size_t ConfusionMatrix::index_of(const ActivityLabel& label) const {
  auto it = std::lower_bound(labels.begin(), labels.end(), label);
  if (it == labels.end() || *it != label) return size();
  return static_cast<std::size_t>(it - labels.begin());
}

namespace {

std::vector<ActivityLabel> merged_labels(std::span<const ActivityLabel> extra, std::span<const ActivityLabel> a,
                                         std::span<const ActivityLabel> b) {
  std::vector<ActivityLabel> out(extra.begin(), extra.end());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<ActivityLabel> track_labels(const ActivityTrack& t) {
  std::vector<ActivityLabel> out;
  for (const auto& iv : t.intervals()) out.push_back(iv.label);
  return out;
}

}  // namespace

std::uint64_t slice_count(Duration span, Duration slice) {
  const auto full = static_cast<std::uint64_t>(span.count() / slice.count());
  const auto rest = span.count() % slice.count();
  return full + (2 * rest >= slice.count() && rest > 0 ? 1 : 0);
}

TimeSliceConfusionMatrix ts_confusion(const ActivityTrack& truth, const ActivityTrack& predicted,
                                      double slice_seconds, std::span<const ActivityLabel> labels) {
  if (truth.begin() != predicted.begin() || truth.end() != predicted.end())
    throw std::invalid_argument("ts_confusion: truth and prediction cover different domains");
  const Duration slice = seconds_to_duration(slice_seconds);
  if (slice.count() <= 0) throw std::invalid_argument("ts_confusion: slice must be positive");

  TimeSliceConfusionMatrix cm;
  cm.labels = merged_labels(labels, track_labels(truth), track_labels(predicted));
  cm.slice_seconds = slice_seconds;
  const std::size_t k = cm.labels.size();
  cm.counts.assign(k * k, 0);

  auto label_ids = [&](const ActivityTrack& t) {
    std::vector<std::size_t> ids;
    for (const auto& iv : t.intervals()) ids.push_back(cm.index_of(iv.label));
    return ids;
  };
  const auto truth_ids = label_ids(truth);
  const auto pred_ids = label_ids(predicted);
  const auto ti = truth.intervals();
  const auto pi = predicted.intervals();

  const std::uint64_t n = slice_count(truth.duration(), slice);
  std::size_t a = 0;
  std::size_t b = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const Timestamp s = truth.begin() + slice * static_cast<std::int64_t>(i);
    const Timestamp e = std::min(truth.end(), s + slice);
    const Timestamp mid = s + (e - s) / 2;
    while (!(mid < ti[a].end)) ++a;
    while (!(mid < pi[b].end)) ++b;
    ++cm.counts[truth_ids[a] * k + pred_ids[b]];
  }
  return cm;
}

ScoreSummary summarize(const ConfusionMatrix& cm) {
  ScoreSummary out;
  const std::size_t k = cm.size();
  const std::uint64_t total = cm.total();
  std::uint64_t trace = 0;
  std::size_t present = 0;
  std::size_t present_no_other = 0;
  for (std::size_t c = 0; c < k; ++c) {
    ClassScore s;
    s.label = cm.labels[c];
    const auto tp = cm.at(c, c);
    trace += tp;
    s.support = cm.row_sum(c);
    s.predicted = cm.col_sum(c);
    s.precision = s.predicted ? static_cast<double>(tp) / static_cast<double>(s.predicted) : 0.0;
    s.recall = s.support ? static_cast<double>(tp) / static_cast<double>(s.support) : 0.0;
    s.f1 = (s.precision + s.recall) > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    if (s.support > 0) {
      ++present;
      out.macro_f1 += s.f1;
      out.macro_tpr += s.recall;
      out.macro_precision += s.precision;
      if (s.label != kOtherLabel) {
        ++present_no_other;
        out.macro_f1_no_other += s.f1;
        out.macro_tpr_no_other += s.recall;
        out.macro_precision_no_other += s.precision;
      }
    }
    out.per_class.push_back(std::move(s));
  }
  auto div = [](double& v, std::size_t n) { v = n ? v / static_cast<double>(n) : 0.0; };
  div(out.macro_f1, present);
  div(out.macro_tpr, present);
  div(out.macro_precision, present);
  div(out.macro_f1_no_other, present_no_other);
  div(out.macro_tpr_no_other, present_no_other);
  div(out.macro_precision_no_other, present_no_other);
  out.accuracy = total ? static_cast<double>(trace) / static_cast<double>(total) : 0.0;
  return out;
}

ClassicResult classic_confusion(std::span<const ActivityLabel> segment_labels,
                                std::span<const ActivityLabel> segment_predictions) {
  if (segment_labels.size() != segment_predictions.size())
    throw std::invalid_argument("classic_confusion: label and prediction counts differ");
  ClassicResult out;
  out.matrix.labels = merged_labels({}, segment_labels, segment_predictions);
  const std::size_t k = out.matrix.size();
  out.matrix.counts.assign(k * k, 0);
  for (std::size_t i = 0; i < segment_labels.size(); ++i)
    ++out.matrix.counts[out.matrix.index_of(segment_labels[i]) * k + out.matrix.index_of(segment_predictions[i])];
  out.summary = summarize(out.matrix);
  return out;
}

std::string format_mean_std(double mean, double stddev) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f±%.2f", mean, stddev);
  return buf;
}

std::string MetricStat::format() const { return format_mean_std(mean, stddev); }

MetricStat mean_std(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean_std: no values");
  double sum = 0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double sq = 0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return MetricStat{mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

ExpectedPerformance expected_performance(std::span<const ScoreSummary> scores) {
  if (scores.empty()) throw std::invalid_argument("expected_performance: no scores");
  auto stat = [&](auto member) {
    std::vector<double> v;
    for (const auto& s : scores) v.push_back(s.*member);
    return mean_std(v);
  };
  ExpectedPerformance out;
  out.n = scores.size();
  out.macro_f1 = stat(&ScoreSummary::macro_f1);
  out.macro_tpr = stat(&ScoreSummary::macro_tpr);
  out.macro_precision = stat(&ScoreSummary::macro_precision);
  out.accuracy = stat(&ScoreSummary::accuracy);
  out.macro_f1_no_other = stat(&ScoreSummary::macro_f1_no_other);
  out.macro_tpr_no_other = stat(&ScoreSummary::macro_tpr_no_other);
  return out;
}

}  // namespace segdecomp
