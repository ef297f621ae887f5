#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "segdecomp/decompose.hpp"
#include "segdecomp/ingest.hpp"
#include "segdecomp/meta.hpp"
#include "segdecomp/pipeline.hpp"

namespace segdecomp {

inline constexpr int kSchemaVersion = 1;

/// Either a CASAS file or a synthetic generator config.
struct DatasetSource {
  std::filesystem::path casas_path;
  std::optional<SynthConfig> synthetic;
};

enum class MethodKind { kFixed, kGridBest, kSWMeta };

std::string_view method_kind_name(MethodKind kind);

struct MethodSpec {
  std::string name;
  MethodKind kind = MethodKind::kFixed;
  /// kFixed only.
  DecomposerConfig decomposer = DecomposerConfig::ew(20, 20);
  /// kGridBest candidates.
  std::vector<DecomposerConfig> grid;
  /// Inner folds used by kGridBest on the training days.
  std::size_t inner_folds = 3;
  /// kSWMeta; hyper.seed is overwritten per repetition.
  SWMetaHyper hyper;
};

struct DivergenceSpec {
  DecomposerKind family = DecomposerKind::kEventWindow;
  std::vector<double> sizes{5, 15, 40};
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  DatasetSource dataset;
  std::vector<MethodSpec> methods;
  ClassifierKind learner = ClassifierKind::kNaiveBayes;
  double alpha = 1.0;
  ComposerConfig composer;
  /// Slice width of the evaluation confusion matrix.
  double slice_seconds = 1.0;
  std::size_t repetitions = 5;
  std::size_t folds = 5;
  std::uint64_t seed = 1;
  /// Worker threads for independent (repetition, fold) cells.
  std::size_t threads = 1;
  DivergenceSpec divergence;
  /// Sorted-key dump of the parsed file; hashed into report manifests.
  std::string canonical;

  PipelineOptions pipeline_options() const;
};

/// Parses the JSON config text. Relative CASAS paths resolve against
/// `base_dir`. Throws ConfigError with the offending key on any problem.
ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir = {});
/// Reads and parses a config file; IoError if it cannot be read.
ExperimentConfig load_experiment_config(const std::filesystem::path& file);

/// 64-bit FNV-1a, as 16 hex digits.
std::string fnv1a_hex(std::string_view text);

/// Twenty days, half in a regime of four quick activities and half in a
/// regime of four long activities interrupted by slow bursts of shared noise.
SynthConfig two_regime_preset(std::uint64_t seed);
/// Brief activities scattered between long ones that share sensors, for
/// window-size studies.
SynthConfig many_short_preset(std::uint64_t seed);

}  // namespace segdecomp
