#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "segdecomp/core.hpp"

namespace segdecomp {

/// A window over a stream: events [first, last) and the time span [start, end).
struct Segment {
  std::size_t first = 0;
  std::size_t last = 0;
  Timestamp start{};
  Timestamp end{};

  std::size_t event_count() const noexcept { return last - first; }
  bool empty() const noexcept { return first == last; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

struct TimeWindowParams {
  double window_seconds = 60;
  double shift_seconds = 60;
  friend bool operator==(const TimeWindowParams&, const TimeWindowParams&) = default;
};

struct EventWindowParams {
  std::size_t window_events = 20;
  std::size_t shift_events = 20;
  friend bool operator==(const EventWindowParams&, const EventWindowParams&) = default;
};

/// Greedy gap-quantile rule; see dw_decompose.
struct DynamicWindowParams {
  double gap_quantile = 0.95;
  std::size_t min_events = 3;
  std::size_t max_events = 30;
  friend bool operator==(const DynamicWindowParams&, const DynamicWindowParams&) = default;
};

enum class DecomposerKind { kTimeWindow, kEventWindow, kDynamicWindow };

class DecomposerConfig {
 public:
  using Params = std::variant<TimeWindowParams, EventWindowParams, DynamicWindowParams>;

  /// Throws ConfigError on invalid parameters (non-positive sizes, shift > window,
  /// min_events > max_events, quantile outside (0, 1]).
  DecomposerConfig(Params params);  // NOLINT(google-explicit-constructor)

  static DecomposerConfig tw(double window_seconds, double shift_seconds);
  static DecomposerConfig ew(std::size_t window_events, std::size_t shift_events);
  static DecomposerConfig dw(double gap_quantile, std::size_t min_events = 3, std::size_t max_events = 30);

  /// Parses the canonical form, e.g. "tw:w=60,s=30", "ew:w=5,s=2", "dw:q=0.95,min=3,max=30".
  static DecomposerConfig parse(std::string_view text);

  DecomposerKind kind() const noexcept { return static_cast<DecomposerKind>(params_.index()); }
  const Params& params() const noexcept { return params_; }
  std::string to_string() const;

  friend bool operator==(const DecomposerConfig&, const DecomposerConfig&) = default;

 private:
  Params params_;
};

std::string_view kind_name(DecomposerKind kind);

/// Windows [t0 + k*shift, t0 + k*shift + window) anchored at the first event,
/// emitted while the window start does not exceed the last event time.
/// Silent windows are kept. Throws DataError on an empty stream.
std::vector<Segment> tw_decompose(const EventStream& stream, double window_seconds, double shift_seconds);

/// Index windows [k*shift, k*shift + window) clipped to the stream; a trailing
/// partial window is kept only if it adds an event no earlier window covered.
std::vector<Segment> ew_decompose(const EventStream& stream, std::size_t window_events, std::size_t shift_events);

/// Opens a segment at the first uncovered event and grows it; the segment is
/// closed before a gap larger than the gap_quantile quantile of all gaps once
/// it holds min_events events, or when it reaches max_events. A stream with
/// fewer than min_events events yields a single segment.
std::vector<Segment> dw_decompose(const EventStream& stream, const DynamicWindowParams& params);

std::vector<Segment> decompose(const EventStream& stream, const DecomposerConfig& config);

/// Nearest-rank quantile of the inter-event gaps (zero for fewer than two events).
Duration gap_quantile(const EventStream& stream, double q);

struct DecomposabilityReport {
  double composed_loss = 0;
  double original_loss = 0;
  double epsilon = 0;
  bool decomposable = false;
  bool strong = false;
};

/// decomposable: composed - original <= epsilon; strong: the difference is <= 0.
/// Both comparisons allow 1e-9 of rounding.
DecomposabilityReport check_decomposability(double composed_loss, double original_loss, double epsilon);

}  // namespace segdecomp
