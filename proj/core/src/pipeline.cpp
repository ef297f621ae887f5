#include "segdecomp/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "segdecomp/errors.hpp"

namespace segdecomp {

void LabeledSegments::append(const LabeledSegments& other) {
  features.insert(features.end(), other.features.begin(), other.features.end());
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
}

IndexedDay index_day(const LabeledDataset& day, const Vocabulary& vocab) {
  return IndexedDay{&day, index_stream(day.stream, vocab)};
}

LabeledSegments segment_and_label(const IndexedDay& day, const DecomposerConfig& config) {
  LabeledSegments out;
  if (day.data->stream.empty()) return out;
  for (const auto& seg : decompose(day.data->stream, config)) {
    if (seg.empty()) continue;
    out.features.push_back(featurize(seg, day.tokens));
    out.labels.push_back(assign_segment_label(seg, day.data->truth));
  }
  return out;
}

ClassifierModel fit_classifier(const LabeledSegments& examples, const Vocabulary& vocab,
                               std::span<const ActivityLabel> classes, const PipelineOptions& options) {
  TrainOptions opts;
  opts.kind = options.learner;
  opts.alpha = options.alpha;
  opts.vocab_size = vocab.size();
  opts.classes.assign(classes.begin(), classes.end());
  return train(examples.features, examples.labels, opts);
}

DayPrediction predict_day(const ClassifierModel& model, const IndexedDay& day, const DecomposerConfig& config,
                          const ComposerConfig& composer) {
  DayPrediction out;
  const auto& data = *day.data;
  if (!data.stream.empty()) {
    out.segments = decompose(data.stream, config);
    out.predictions.reserve(out.segments.size());
    for (const auto& seg : out.segments) {
      if (seg.empty()) {
        out.predictions.emplace_back();
      } else {
        out.predictions.push_back(model.predict(featurize(seg, day.tokens)));
      }
    }
  }
  out.track = compose(out.segments, out.predictions, model.classes(), data.truth.begin(), data.truth.end(), composer);
  return out;
}

ScoreSummary score_track(const ActivityTrack& truth, const ActivityTrack& predicted, double slice_seconds,
                         std::span<const ActivityLabel> labels) {
  return summarize(ts_confusion(truth, predicted, slice_seconds, labels));
}

std::pair<LabeledDataset, LabeledDataset> split_day(const LabeledDataset& day, double fraction) {
  const Timestamp b = day.truth.begin();
  const Timestamp e = day.truth.end();
  const Timestamp cut = b + Duration{static_cast<std::int64_t>(
                                std::llround(static_cast<double>((e - b).count()) * fraction))};
  std::vector<SensorEvent> head;
  std::vector<SensorEvent> tail;
  for (const auto& ev : day.stream) (ev.at < cut ? head : tail).push_back(ev);
  return {LabeledDataset{EventStream(std::move(head)), day.truth.restrict(b, cut), day.label_set},
          LabeledDataset{EventStream(std::move(tail)), day.truth.restrict(cut, e), day.label_set}};
}

std::vector<ActivityLabel> label_union(std::span<const LabeledDataset> days) {
  std::vector<ActivityLabel> out{ActivityLabel{kOtherLabel}};
  for (const auto& d : days) out.insert(out.end(), d.label_set.begin(), d.label_set.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<EventStream> streams_of(std::span<const LabeledDataset> days) {
  std::vector<EventStream> out;
  out.reserve(days.size());
  for (const auto& d : days) out.push_back(d.stream);
  return out;
}

FixedPipeline fit_fixed(std::span<const LabeledDataset> train_days, const DecomposerConfig& config,
                        const PipelineOptions& options) {
  if (options.observer)
    for (const auto& d : train_days) options.observer(d);
  FixedPipeline out{config, build_vocabulary(streams_of(train_days)), {}};
  LabeledSegments examples;
  for (const auto& d : train_days) examples.append(segment_and_label(index_day(d, out.vocab), config));
  if (examples.size() == 0) throw DataError("decomposer " + config.to_string() + " produced no training segments");
  out.model = fit_classifier(examples, out.vocab, label_union(train_days), options);
  return out;
}

ActivityTrack predict_fixed(const FixedPipeline& pipeline, std::span<const LabeledDataset> test_days,
                            const PipelineOptions& options) {
  std::vector<ActivityTrack> tracks;
  tracks.reserve(test_days.size());
  for (const auto& d : test_days)
    tracks.push_back(predict_day(pipeline.model, index_day(d, pipeline.vocab), pipeline.config, options.composer).track);
  return meta_compose(tracks);
}

ActivityTrack joined_truth(std::span<const LabeledDataset> days) {
  std::vector<ActivityTrack> tracks;
  tracks.reserve(days.size());
  for (const auto& d : days) tracks.push_back(d.truth);
  return meta_compose(tracks);
}

}  // namespace segdecomp
