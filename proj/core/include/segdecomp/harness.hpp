#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "segdecomp/config.hpp"
#include "segdecomp/meta.hpp"
#include "segdecomp/metrics.hpp"

namespace segdecomp {

/// Contiguous blocks of dates; the first (n mod k) blocks hold one extra day.
struct FoldPlan {
  std::size_t k = 0;
  std::map<CivilDate, std::size_t> fold_of;
  /// Dates of each fold, in order.
  std::vector<std::vector<CivilDate>> folds;
};

/// Throws DataError with fewer than k distinct dates.
FoldPlan temporal_kfold(std::span<const CivilDate> dates, std::size_t k);
FoldPlan temporal_kfold(std::span<const LabeledDataset> days, std::size_t k);

struct FoldData {
  std::vector<LabeledDataset> train;
  std::vector<LabeledDataset> test;
};

/// Days of fold `fold` are the test set, every other planned day trains.
FoldData fold_split(const FoldPlan& plan, std::span<const LabeledDataset> days, std::size_t fold);

struct FoldRecord {
  std::size_t repetition = 0;
  std::size_t fold = 0;
  std::vector<CivilDate> test_dates;
  /// Decomposer used for the fold (fixed and grid-best methods).
  std::string config;
  /// Per test day decomposer (SWMeta).
  std::vector<std::pair<CivilDate, std::string>> selected;
  ScoreSummary scores;
};

struct MethodReport {
  std::string name;
  MethodKind kind = MethodKind::kFixed;
  std::vector<FoldRecord> records;
  ExpectedPerformance aggregate;
};

struct Report {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::size_t folds = 0;
  std::size_t repetitions = 0;
  double slice_seconds = 1;
  std::vector<MethodReport> methods;
  double runtime_seconds = 0;
};

/// Sees every dataset handed to a training routine, with the fold it belongs to.
using FoldObserver =
    std::function<void(std::size_t repetition, std::size_t fold, const FoldPlan& plan, const LabeledDataset& training)>;

struct RunHooks {
  FoldObserver on_training;
  std::function<void(const std::string&)> log;
};

/// The dataset for repetition r (synthetic data uses generator seed + r).
LabeledDataset load_dataset(const DatasetSource& source, std::size_t repetition = 0,
                            std::vector<std::string>* warnings = nullptr);

/// Scores one method on the test days of one fold.
FoldRecord evaluate_fold(const MethodSpec& method, const FoldData& data, const PipelineOptions& options,
                         std::uint64_t seed);

/// Every (repetition, fold, method) cell, then aggregates. Failures abort
/// with the repetition, fold and method in the message, keeping the error type.
Report run_experiment(const ExperimentConfig& config, const RunHooks& hooks = {});

/// Recomputes each method's aggregate from its records.
void recompute_aggregates(Report& report);

/// Per-fold macro F1 of a method, ordered by (repetition, fold).
std::vector<double> fold_f1(const MethodReport& method);

/// Meta method against every fixed or grid-best method of the report.
MetaAdvantage report_meta_advantage(const Report& report, const std::string& meta_method);

struct DivergencePoint {
  double size = 0;
  double classic_f1 = 0;
  double classic_shift = 0;
  double ts_f1 = 0;
  double ts_shift = 0;
};

/// Candidate shifts for a window: {1, ceil(w/4), ceil(w/2), w} (seconds for
/// time windows), deduplicated.
std::vector<double> candidate_shifts(double size);

/// For every window size: each candidate shift is scored by temporal k-fold
/// (per-segment classic macro F1 and composed time-slice macro F1, both
/// averaged over folds); the best shift is chosen separately per metric.
std::vector<DivergencePoint> run_divergence_study(const LabeledDataset& dataset, DecomposerKind family,
                                                  std::span<const double> sizes, std::size_t folds,
                                                  const PipelineOptions& options);

/// report.json (records + manifest), scores.json (records only, byte-stable
/// for a fixed config and seed), scores.csv and table.txt.
void emit_report(const Report& report, const std::filesystem::path& dir);
std::string report_json(const Report& report, bool with_manifest);
Report read_report(const std::filesystem::path& file);
std::string scores_csv(const Report& report);
/// `method | TPR mean±std | F1 mean±std`
std::string format_table(const Report& report);
std::string divergence_csv(std::span<const DivergencePoint> points);

}  // namespace segdecomp
