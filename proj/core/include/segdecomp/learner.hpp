#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "segdecomp/core.hpp"
#include "segdecomp/decompose.hpp"
#include "segdecomp/ingest.hpp"

namespace segdecomp {

struct TokenCount {
  std::uint32_t index = 0;
  std::uint32_t count = 0;
  friend bool operator==(const TokenCount&, const TokenCount&) = default;
};

/// Sparse bag of token indices, sorted by index. `oov` counts dropped events.
struct FeatureVector {
  std::vector<TokenCount> counts;
  std::size_t oov = 0;

  std::size_t total() const noexcept;
  bool empty() const noexcept { return counts.empty(); }
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// `token_indices` is the per-event output of index_stream; zeros are dropped
/// and counted as out of vocabulary.
FeatureVector featurize(const Segment& segment, std::span<const std::uint32_t> token_indices);
FeatureVector featurize(const Segment& segment, const EventStream& stream, const Vocabulary& vocab,
                        const TokenEncoder& encoder = {});

/// The label with the largest total overlap with the segment window; ties go
/// to the label whose overlapping interval starts first. Other when the
/// window does not meet the truth domain.
ActivityLabel assign_segment_label(const Segment& segment, const ActivityTrack& truth);

enum class ClassifierKind { kMajority, kNaiveBayes };

/// Class probabilities, aligned with ClassifierModel::classes().
struct PredictionDistribution {
  std::vector<double> probabilities;

  /// First index of the maximum.
  std::size_t argmax() const;
  friend bool operator==(const PredictionDistribution&, const PredictionDistribution&) = default;
};

struct TrainOptions {
  ClassifierKind kind = ClassifierKind::kNaiveBayes;
  double alpha = 1.0;
  /// Number of known tokens; indices above it are treated as unknown.
  std::size_t vocab_size = 0;
  /// Output classes. Empty means the sorted distinct training labels.
  std::vector<ActivityLabel> classes;
};

/// Multinomial naive Bayes with additive smoothing (priors and token
/// likelihoods), or a constant majority-class model.
class ClassifierModel {
 public:
  ClassifierModel() = default;

  /// Rebuilds a model from stored parameters (log_likelihoods is row-major
  /// classes x (vocab_size + 1), column 0 unused). Validates shapes.
  static ClassifierModel from_parts(ClassifierKind kind, double alpha, std::size_t vocab_size,
                                    std::vector<ActivityLabel> classes, std::vector<double> log_priors,
                                    std::vector<double> log_likelihoods, std::size_t majority);

  ClassifierKind kind() const noexcept { return kind_; }
  double alpha() const noexcept { return alpha_; }
  std::size_t vocab_size() const noexcept { return vocab_size_; }
  const std::vector<ActivityLabel>& classes() const noexcept { return classes_; }
  const std::vector<double>& log_priors() const noexcept { return log_priors_; }
  const std::vector<double>& log_likelihoods() const noexcept { return log_likelihoods_; }
  std::size_t majority_class() const noexcept { return majority_; }
  double log_likelihood(std::size_t cls, std::uint32_t token) const {
    return log_likelihoods_[cls * (vocab_size_ + 1) + token];
  }
  /// Index into classes(), or classes().size() if unknown.
  std::size_t class_index(const ActivityLabel& label) const;

  PredictionDistribution predict(const FeatureVector& features) const;

  friend bool operator==(const ClassifierModel&, const ClassifierModel&) = default;

 private:
  friend ClassifierModel train(std::span<const FeatureVector>, std::span<const ActivityLabel>, const TrainOptions&);

  ClassifierKind kind_ = ClassifierKind::kNaiveBayes;
  double alpha_ = 1.0;
  std::size_t vocab_size_ = 0;
  std::vector<ActivityLabel> classes_;
  std::vector<double> log_priors_;
  std::vector<double> log_likelihoods_;
  std::size_t majority_ = 0;
};

/// Throws DataError for an empty or mismatched training set, ConfigError for
/// alpha <= 0 or a label outside options.classes.
ClassifierModel train(std::span<const FeatureVector> features, std::span<const ActivityLabel> labels,
                      const TrainOptions& options);

inline PredictionDistribution predict(const ClassifierModel& model, const FeatureVector& features) {
  return model.predict(features);
}

}  // namespace segdecomp
