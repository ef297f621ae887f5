#pragma once

#include <filesystem>
#include <string_view>

#include "segdecomp/meta.hpp"
#include "segdecomp/pipeline.hpp"

namespace segdecomp {

std::string_view library_version();

/// One JSON file holding the decomposer, vocabulary and classifier.
void save_fixed_pipeline(const FixedPipeline& pipeline, const std::filesystem::path& file);
FixedPipeline load_fixed_pipeline(const std::filesystem::path& file);

/// A directory with vocabulary.json, model.json, scaler.json, selector.json,
/// grid.json and manifest.json. Existing files are overwritten.
void save_bundle(const SWMetaBundle& bundle, const std::filesystem::path& dir);
/// Throws IoError for missing files and DataError for malformed content.
SWMetaBundle load_bundle(const std::filesystem::path& dir);

}  // namespace segdecomp
