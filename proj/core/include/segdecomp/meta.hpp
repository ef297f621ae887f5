#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segdecomp/core.hpp"
#include "segdecomp/decompose.hpp"
#include "segdecomp/mlp.hpp"
#include "segdecomp/pipeline.hpp"

namespace segdecomp {

/// One calendar day of a dataset: the unit a decomposer is selected for.
struct MetaSegment {
  LabeledDataset day;
  CivilDate date;
};

/// Only a one-day span is supported; anything else throws ConfigError.
std::vector<MetaSegment> make_meta_segments(const LabeledDataset& dataset, Duration span = std::chrono::days{1});
std::vector<MetaSegment> make_meta_segments(std::span<const LabeledDataset> days);

/// Periodic B-spline basis of `degree` with `n_basis` uniform knots over
/// [0, period), evaluated at x mod period. Entries are non-negative and sum
/// to one. Basis i of degree 0 is the indicator of [i*h, (i+1)*h), h = period/n_basis.
/// Throws std::invalid_argument unless n_basis >= degree + 1 and period > 0.
std::vector<double> spline_basis(double x, double period, std::size_t n_basis, int degree);

struct SplineConfig {
  int degree = 3;
  std::size_t n_basis = 6;
};

/// Per-sensor event-count standardisation fitted on training days.
struct ScalerStats {
  std::vector<std::string> sensors;
  std::vector<double> mean;
  std::vector<double> stddev;
};

ScalerStats fit_scaler(std::span<const MetaSegment> training);

struct MetaFeatures {
  /// z-scored event count per sensor, in scaler order.
  std::vector<double> sensor_counts;
  /// Events from sensors the scaler has never seen.
  double overflow = 0;
  /// Day of week, Monday = 0, period 7.
  std::vector<double> dow_basis;
  /// Month, January = 0, period 12.
  std::vector<double> month_basis;

  std::vector<double> flatten() const;
};

MetaFeatures extract_meta_features(const MetaSegment& segment, const ScalerStats& scaler, const SplineConfig& spline,
                                   std::vector<std::string>* warnings = nullptr);

struct GridSearchResult {
  std::size_t best = 0;
  std::vector<std::optional<double>> scores;
  std::vector<std::string> failures;
};

/// Scores every config with `objective` and returns the arg-max (first on ties).
/// Configs whose objective throws are recorded as failures; if all fail a
/// DataError lists them.
GridSearchResult grid_search(std::span<const DecomposerConfig> grid,
                             const std::function<double(const DecomposerConfig&)>& objective);

/// Grid search over tasks: each task's day is split (first `train_fraction`
/// of its span trains, the rest validates); a model is trained on the pooled
/// training parts and the objective is the mean validation macro F1 (time
/// slice, after compose).
DecomposerConfig grid_search_decomposer(std::span<const MetaSegment> tasks, std::span<const DecomposerConfig> grid,
                                        const PipelineOptions& options, double train_fraction = 0.7);

/// TW w in {30, 60, 120} s x s in {w, w/2}; EW w in {3, 5, 10, 20, 30} x
/// s in {w, ceil(w/2)}; DW with gap quantile in {0.90, 0.95}.
std::vector<DecomposerConfig> default_decomposer_grid();

enum class SelectorKind { kNearestNeighbor, kMlp };

/// Model N: meta-features -> index into the decomposer grid.
class MetaSelector {
 public:
  MetaSelector() = default;
  static MetaSelector fit(SelectorKind kind, std::vector<std::vector<double>> features,
                          std::vector<std::size_t> choices, std::size_t grid_size, const MlpOptions& mlp = {});
  static MetaSelector nearest_neighbor(std::vector<std::vector<double>> features, std::vector<std::size_t> choices,
                                       std::size_t grid_size);
  static MetaSelector from_mlp(Mlp mlp, std::size_t grid_size);

  std::size_t predict(std::span<const double> features) const;

  SelectorKind kind() const noexcept { return kind_; }
  std::size_t grid_size() const noexcept { return grid_size_; }
  const std::vector<std::vector<double>>& features() const noexcept { return features_; }
  const std::vector<std::size_t>& choices() const noexcept { return choices_; }
  const Mlp& mlp() const noexcept { return mlp_; }

 private:
  SelectorKind kind_ = SelectorKind::kNearestNeighbor;
  std::size_t grid_size_ = 0;
  std::vector<std::vector<double>> features_;
  std::vector<std::size_t> choices_;
  Mlp mlp_;
};

struct SWMetaHyper {
  Duration meta_segment_span = std::chrono::days{1};
  /// Tasks sampled per outer iteration (J).
  std::size_t batch_size = 8;
  std::size_t outer_repetitions = 10;
  std::vector<DecomposerConfig> grid = default_decomposer_grid();
  SelectorKind selector = SelectorKind::kNearestNeighbor;
  std::uint64_t seed = 1;
  /// Share of a task's time span used to train during the outer loop.
  double task_train_fraction = 0.7;
  SplineConfig spline;
  MlpOptions mlp;
  /// Opaque pass-through hyperparameter; recorded in the bundle manifest only.
  std::string gamma;
  /// Free-form meta-knowledge notes carried into the manifest.
  std::map<std::string, std::string> meta_knowledge;
};

/// What happened during training, kept for reports and tests.
struct SWMetaTrace {
  /// Grid index chosen for each outer-loop task, in order.
  std::vector<std::size_t> outer_choices;
  /// The starting point of the per-day local search.
  std::size_t global_choice = 0;
  /// Per-family starting points (grid indices) used as extra neighbours.
  std::vector<std::size_t> family_anchors;
  /// Per training day: date and selected grid index.
  std::vector<std::pair<CivilDate, std::size_t>> day_choices;
};

struct SWMetaBundle {
  Vocabulary vocab;
  ClassifierModel model;
  ScalerStats scaler;
  MetaSelector selector;
  std::vector<DecomposerConfig> grid;
  SplineConfig spline;
  std::uint64_t seed = 0;
  std::string gamma;
  std::map<std::string, std::string> meta_knowledge;
  SWMetaTrace trace;
};

/// Trains the inner model M and the selector N.
///
/// Outer loop (outer_repetitions times): sample `batch_size` tasks; for each,
/// grid-search the decomposer on the task's training part against its
/// validation part, decompose the validation part with the winner and retrain
/// M on the pool of segmented validation parts (latest choice per task).
///
/// Per-day selection: starting from the most frequent outer-loop winner, a
/// hill climb over the grid (one step per parameter within a family, plus the
/// outer-loop favourite of every other family) picks each training day's
/// decomposer with M fixed. The (meta-features, choice) pairs train N, and M
/// is finally retrained on every training day decomposed with its own choice.
///
/// Throws DataError with fewer than batch_size training days.
SWMetaBundle swmeta_train(std::span<const LabeledDataset> train_days, const SWMetaHyper& hyper,
                          const PipelineOptions& options);
SWMetaBundle swmeta_train(const LabeledDataset& train, const SWMetaHyper& hyper, const PipelineOptions& options);

struct SWMetaPrediction {
  ActivityTrack track;
  /// Per test day: date and selected grid index.
  std::vector<std::pair<CivilDate, std::size_t>> selected;
};

/// Selects a decomposer per test day, predicts and composes each day, then
/// joins the days with meta_compose.
SWMetaPrediction swmeta_predict(std::span<const LabeledDataset> test_days, const SWMetaBundle& bundle,
                                const PipelineOptions& options);
SWMetaPrediction swmeta_predict(const LabeledDataset& test, const SWMetaBundle& bundle,
                                const PipelineOptions& options);

struct MetaAdvantage {
  double meta_loss = 0;
  double best_fixed_loss = 0;
  std::string best_fixed_method;
  /// meta_loss - best_fixed_loss; negative means the meta method is better.
  double difference = 0;
  /// Meta F1 minus best fixed F1 (= -difference).
  double advantage = 0;
  bool holds = false;
};

/// Loss is 1 - mean macro F1 over folds. `holds` is the strict improvement
/// condition difference < 0. Throws std::invalid_argument if the fold counts differ.
MetaAdvantage check_meta_advantage(std::span<const double> meta_f1_per_fold,
                                   const std::map<std::string, std::vector<double>>& fixed_f1_per_fold);

}  // namespace segdecomp
