#pragma once

#include <functional>
#include <span>
#include <vector>

#include "segdecomp/compose.hpp"
#include "segdecomp/core.hpp"
#include "segdecomp/decompose.hpp"
#include "segdecomp/ingest.hpp"
#include "segdecomp/learner.hpp"
#include "segdecomp/metrics.hpp"

namespace segdecomp {

/// Called with every dataset that reaches a training path. Used by the
/// harness to prove that test days never leak into training.
using TrainingObserver = std::function<void(const LabeledDataset&)>;

struct PipelineOptions {
  ClassifierKind learner = ClassifierKind::kNaiveBayes;
  double alpha = 1.0;
  ComposerConfig composer;
  /// Slice width of the time-slice confusion matrix.
  double eval_slice_seconds = 1.0;
  TrainingObserver observer;
};

/// Training examples: one per non-silent segment.
struct LabeledSegments {
  std::vector<FeatureVector> features;
  std::vector<ActivityLabel> labels;

  std::size_t size() const noexcept { return labels.size(); }
  void append(const LabeledSegments& other);
};

/// Day (or part of a day) together with its token indices.
struct IndexedDay {
  const LabeledDataset* data = nullptr;
  std::vector<std::uint32_t> tokens;
};

IndexedDay index_day(const LabeledDataset& day, const Vocabulary& vocab);

/// Decomposes the day and labels every non-silent segment by maximum overlap.
LabeledSegments segment_and_label(const IndexedDay& day, const DecomposerConfig& config);

ClassifierModel fit_classifier(const LabeledSegments& examples, const Vocabulary& vocab,
                               std::span<const ActivityLabel> classes, const PipelineOptions& options);

/// Segments, predictions and composed track of one day. Silent segments carry
/// an empty (abstaining) distribution.
struct DayPrediction {
  std::vector<Segment> segments;
  std::vector<PredictionDistribution> predictions;
  ActivityTrack track;
};

/// Decompose, predict every segment with `model`, compose over the day's truth domain.
DayPrediction predict_day(const ClassifierModel& model, const IndexedDay& day, const DecomposerConfig& config,
                          const ComposerConfig& composer);

/// Time-slice score of a predicted track against the truth.
ScoreSummary score_track(const ActivityTrack& truth, const ActivityTrack& predicted, double slice_seconds,
                         std::span<const ActivityLabel> labels = {});

/// The first `fraction` of the day's time span and the remainder.
std::pair<LabeledDataset, LabeledDataset> split_day(const LabeledDataset& day, double fraction);

/// Union of the label sets of `days` (always contains Other).
std::vector<ActivityLabel> label_union(std::span<const LabeledDataset> days);
std::vector<EventStream> streams_of(std::span<const LabeledDataset> days);

/// A single decomposer applied to every day.
struct FixedPipeline {
  DecomposerConfig config = DecomposerConfig::ew(20, 20);
  Vocabulary vocab;
  ClassifierModel model;
};

FixedPipeline fit_fixed(std::span<const LabeledDataset> train_days, const DecomposerConfig& config,
                        const PipelineOptions& options);

/// Per-day prediction joined with meta_compose.
ActivityTrack predict_fixed(const FixedPipeline& pipeline, std::span<const LabeledDataset> test_days,
                            const PipelineOptions& options);

/// Ground truth of several days joined the same way predictions are.
ActivityTrack joined_truth(std::span<const LabeledDataset> days);

}  // namespace segdecomp
