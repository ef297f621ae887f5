#pragma once

#include <istream>
#include <ostream>
#include <span>

#include "segdecomp/core.hpp"
#include "segdecomp/decompose.hpp"
#include "segdecomp/learner.hpp"

namespace segdecomp {

enum class TieBreak { kEarlierSegment, kHigherConfidence };

struct ComposerConfig {
  double slice_seconds = 1.0;
  TieBreak tie_break = TieBreak::kEarlierSegment;
};

/// Rebuilds a timeline over [begin, end) from per-segment predictions.
///
/// The domain is cut into slices of `slice_seconds` starting at `begin` (the
/// last slice may be shorter). Every segment adds its distribution to each
/// slice it overlaps, scaled by the covered fraction of that slice. A slice
/// takes the label with the largest summed vote; slices without any vote are
/// Other. Segments are visited in (start, end, first, last) order so the
/// result does not depend on the input order.
///
/// Ties: kEarlierSegment asks the first segment that voted on the slice,
/// kHigherConfidence picks the tied label with the highest single-segment
/// probability. Remaining ties go to the lowest class index.
///
/// A prediction with no probabilities abstains (used for silent windows).
/// Throws std::invalid_argument on mismatched lengths or distribution sizes.
ActivityTrack compose(std::span<const Segment> segments, std::span<const PredictionDistribution> predictions,
                      std::span<const ActivityLabel> classes, Timestamp begin, Timestamp end,
                      const ComposerConfig& config = {});

/// Concatenates temporally ordered, non-overlapping tracks; gaps become Other.
/// Throws std::invalid_argument if two domains overlap or are out of order.
ActivityTrack meta_compose(std::span<const ActivityTrack> tracks);

/// One `label<TAB>start_iso<TAB>end_iso` line per interval.
void write_track(std::ostream& out, const ActivityTrack& track);
/// Inverse of write_track. Throws ParseError on bad lines.
ActivityTrack read_track(std::istream& in);

}  // namespace segdecomp
