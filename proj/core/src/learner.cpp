#include "segdecomp/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "segdecomp/errors.hpp"

namespace segdecomp {

std::size_t FeatureVector::total() const noexcept {
  std::size_t n = 0;
  for (const auto& tc : counts) n += tc.count;
  return n;
}

FeatureVector featurize(const Segment& segment, std::span<const std::uint32_t> token_indices) {
  std::vector<std::uint32_t> ids;
  ids.reserve(segment.event_count());
  FeatureVector out;
  for (std::size_t i = segment.first; i < segment.last; ++i) {
    if (token_indices[i] == 0) {
      ++out.oov;
    } else {
      ids.push_back(token_indices[i]);
    }
  }
  std::sort(ids.begin(), ids.end());
  for (auto id : ids) {
    if (!out.counts.empty() && out.counts.back().index == id) {
      ++out.counts.back().count;
    } else {
      out.counts.push_back({id, 1});
    }
  }
  return out;
}

FeatureVector featurize(const Segment& segment, const EventStream& stream, const Vocabulary& vocab,
                        const TokenEncoder& encoder) {
  std::vector<std::uint32_t> indices(stream.size(), 0);
  for (std::size_t i = segment.first; i < segment.last; ++i) indices[i] = vocab.index_of(encoder.encode(stream[i]));
  return featurize(segment, indices);
}

ActivityLabel assign_segment_label(const Segment& segment, const ActivityTrack& truth) {
  const Timestamp s = std::max(segment.start, truth.begin());
  const Timestamp e = std::min(segment.end, truth.end());
  if (!(s < e)) return ActivityLabel{kOtherLabel};

  struct Tally {
    Duration overlap{0};
    Timestamp first_start;
  };
  std::map<ActivityLabel, Tally> tally;
  const auto intervals = truth.intervals();
  for (std::size_t i = truth.interval_index_at(s); i < intervals.size() && intervals[i].start < e; ++i) {
    const auto& iv = intervals[i];
    const Duration ov = std::min(iv.end, e) - std::max(iv.start, s);
    auto [it, inserted] = tally.try_emplace(iv.label, Tally{Duration{0}, iv.start});
    it->second.overlap += ov;
  }
  const ActivityLabel* best = nullptr;
  const Tally* best_tally = nullptr;
  for (const auto& [label, t] : tally) {
    if (!best || t.overlap > best_tally->overlap ||
        (t.overlap == best_tally->overlap && t.first_start < best_tally->first_start)) {
      best = &label;
      best_tally = &t;
    }
  }
  return *best;
}

std::size_t PredictionDistribution::argmax() const {
  return static_cast<std::size_t>(
      std::distance(probabilities.begin(), std::max_element(probabilities.begin(), probabilities.end())));
}

std::size_t ClassifierModel::class_index(const ActivityLabel& label) const {
  auto it = std::lower_bound(classes_.begin(), classes_.end(), label);
  if (it == classes_.end() || *it != label) return classes_.size();
  return static_cast<std::size_t>(it - classes_.begin());
}

ClassifierModel ClassifierModel::from_parts(ClassifierKind kind, double alpha, std::size_t vocab_size,
                                            std::vector<ActivityLabel> classes, std::vector<double> log_priors,
                                            std::vector<double> log_likelihoods, std::size_t majority) {
  if (classes.empty()) throw DataError("model has no classes");
  if (!std::is_sorted(classes.begin(), classes.end()) ||
      std::adjacent_find(classes.begin(), classes.end()) != classes.end())
    throw DataError("model classes must be sorted and unique");
  if (log_priors.size() != classes.size()) throw DataError("model prior count does not match classes");
  if (kind == ClassifierKind::kNaiveBayes && log_likelihoods.size() != classes.size() * (vocab_size + 1))
    throw DataError("model likelihood table has the wrong shape");
  if (majority >= classes.size()) throw DataError("model majority class out of range");
  ClassifierModel m;
  m.kind_ = kind;
  m.alpha_ = alpha;
  m.vocab_size_ = vocab_size;
  m.classes_ = std::move(classes);
  m.log_priors_ = std::move(log_priors);
  m.log_likelihoods_ = std::move(log_likelihoods);
  m.majority_ = majority;
  return m;
}

PredictionDistribution ClassifierModel::predict(const FeatureVector& features) const {
  const std::size_t k = classes_.size();
  PredictionDistribution out;
  out.probabilities.assign(k, 0.0);
  if (kind_ == ClassifierKind::kMajority) {
    out.probabilities[majority_] = 1.0;
    return out;
  }
  std::vector<double> score(log_priors_);
  for (const auto& tc : features.counts) {
    if (tc.index == 0 || tc.index > vocab_size_) continue;
    for (std::size_t c = 0; c < k; ++c) score[c] += tc.count * log_likelihood(c, tc.index);
  }
  const double top = *std::max_element(score.begin(), score.end());
  double sum = 0;
  for (std::size_t c = 0; c < k; ++c) {
    out.probabilities[c] = std::exp(score[c] - top);
    sum += out.probabilities[c];
  }
  for (auto& p : out.probabilities) p /= sum;
  return out;
}

ClassifierModel train(std::span<const FeatureVector> features, std::span<const ActivityLabel> labels,
                      const TrainOptions& options) {
  if (features.size() != labels.size()) throw DataError("feature and label counts differ");
  if (features.empty()) throw DataError("cannot train on an empty training set");
  if (!(options.alpha > 0)) throw ConfigError("smoothing alpha must be positive");

  std::vector<ActivityLabel> classes = options.classes;
  if (classes.empty()) classes.assign(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

  ClassifierModel m;
  m.kind_ = options.kind;
  m.alpha_ = options.alpha;
  m.vocab_size_ = options.vocab_size;
  m.classes_ = std::move(classes);
  const std::size_t k = m.classes_.size();
  const std::size_t v = m.vocab_size_;

  std::vector<double> class_count(k, 0.0);
  std::vector<std::size_t> label_idx(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t c = m.class_index(labels[i]);
    if (c == k) throw ConfigError("training label '" + labels[i] + "' is not among the model classes");
    label_idx[i] = c;
    class_count[c] += 1.0;
  }
  m.majority_ = static_cast<std::size_t>(
      std::distance(class_count.begin(), std::max_element(class_count.begin(), class_count.end())));

  const double n = static_cast<double>(labels.size());
  const double a = options.alpha;
  m.log_priors_.resize(k);
  for (std::size_t c = 0; c < k; ++c)
    m.log_priors_[c] = std::log((class_count[c] + a) / (n + a * static_cast<double>(k)));

  if (m.kind_ == ClassifierKind::kNaiveBayes) {
    std::vector<double> token_count(k * (v + 1), 0.0);
    std::vector<double> class_tokens(k, 0.0);
    for (std::size_t i = 0; i < features.size(); ++i) {
      const std::size_t c = label_idx[i];
      for (const auto& tc : features[i].counts) {
        if (tc.index == 0 || tc.index > v) continue;
        token_count[c * (v + 1) + tc.index] += tc.count;
        class_tokens[c] += tc.count;
      }
    }
    m.log_likelihoods_.assign(k * (v + 1), 0.0);
    for (std::size_t c = 0; c < k; ++c) {
      const double denom = std::log(class_tokens[c] + a * static_cast<double>(v));
      for (std::size_t t = 1; t <= v; ++t)
        m.log_likelihoods_[c * (v + 1) + t] = std::log(token_count[c * (v + 1) + t] + a) - denom;
    }
  }
  return m;
}

}  // namespace segdecomp
