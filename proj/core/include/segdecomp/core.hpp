#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace segdecomp {

// Naive local time with microsecond resolution. CASAS files carry wall-clock
// times without a zone, so no conversion is ever applied.
using Duration = std::chrono::microseconds;
using Timestamp = std::chrono::local_time<Duration>;
using CivilDate = std::chrono::year_month_day;
using ActivityLabel = std::string;

/// Reserved label for time not covered by any annotated activity.
inline constexpr std::string_view kOtherLabel = "Other";

constexpr Timestamp from_micros(std::int64_t us) { return Timestamp{Duration{us}}; }
constexpr std::int64_t to_micros(Timestamp t) { return t.time_since_epoch().count(); }
Duration seconds_to_duration(double seconds);
double to_seconds(Duration d);

CivilDate civil_date(Timestamp t);
Timestamp start_of_day(CivilDate date);
Timestamp make_timestamp(int year, unsigned month, unsigned day, unsigned hour = 0,
                         unsigned minute = 0, unsigned second = 0, std::int64_t micros = 0);

/// "YYYY-MM-DD HH:MM:SS.ffffff" (CASAS layout).
std::string format_timestamp(Timestamp t);
/// "YYYY-MM-DDTHH:MM:SS.ffffff".
std::string format_iso(Timestamp t);
std::string format_date(CivilDate date);
/// Accepts "YYYY-MM-DD" and "HH:MM:SS[.f{1,6}]"; nullopt on any grammar error.
std::optional<Timestamp> parse_timestamp(std::string_view date, std::string_view time);
/// Inverse of format_iso; also accepts a space instead of 'T'.
std::optional<Timestamp> parse_iso(std::string_view text);

struct SensorEvent {
  Timestamp at;
  std::string sensor_id;
  std::string value;

  friend bool operator==(const SensorEvent&, const SensorEvent&) = default;
};

/// Events ordered by timestamp. Construction sorts stably, so events sharing a
/// timestamp keep their input order.
class EventStream {
 public:
  EventStream() = default;
  explicit EventStream(std::vector<SensorEvent> events);

  std::span<const SensorEvent> events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }
  const SensorEvent& operator[](std::size_t i) const { return events_[i]; }
  auto begin() const noexcept { return events_.begin(); }
  auto end() const noexcept { return events_.end(); }
  Timestamp first_time() const { return events_.front().at; }
  Timestamp last_time() const { return events_.back().at; }

  friend bool operator==(const EventStream&, const EventStream&) = default;

 private:
  std::vector<SensorEvent> events_;
};

enum class ViolationKind { kOutOfOrder, kEmptySensorId, kEmptyValue };

struct StreamViolation {
  std::size_t index;
  ViolationKind kind;
  std::string message;
};

/// Reports ordering and field problems in raw (not yet sorted) input.
std::vector<StreamViolation> validate_stream(std::span<const SensorEvent> events);
inline std::vector<StreamViolation> validate_stream(const EventStream& stream) {
  return validate_stream(stream.events());
}

struct ActivityInterval {
  ActivityLabel label;
  Timestamp start;
  Timestamp end;

  Duration duration() const { return end - start; }
  friend bool operator==(const ActivityInterval&, const ActivityInterval&) = default;
};

/// A labelled timeline over the half-open domain [begin, end). The intervals
/// tile the domain exactly: sorted, non-overlapping, gap-free.
class ActivityTrack {
 public:
  ActivityTrack() = default;
  /// Throws std::invalid_argument unless the intervals tile [begin, end).
  ActivityTrack(Timestamp begin, Timestamp end, std::vector<ActivityInterval> intervals);

  /// Builds a track from sorted, non-overlapping (possibly sparse) intervals:
  /// clips them to the domain, fills gaps with Other and merges neighbours
  /// that share a label.
  static ActivityTrack tile(Timestamp begin, Timestamp end, std::vector<ActivityInterval> sparse);

  Timestamp begin() const noexcept { return begin_; }
  Timestamp end() const noexcept { return end_; }
  Duration duration() const noexcept { return end_ - begin_; }
  bool empty() const noexcept { return begin_ == end_; }
  std::span<const ActivityInterval> intervals() const noexcept { return intervals_; }

  /// Label of the interval containing t. Throws std::out_of_range outside the domain.
  const ActivityLabel& label_at(Timestamp t) const;
  /// Index of the interval containing t (binary search).
  std::size_t interval_index_at(Timestamp t) const;
  /// The part of the track inside [begin, end) intersected with the domain.
  ActivityTrack restrict(Timestamp begin, Timestamp end) const;
  /// Same timeline with adjacent equal-label intervals merged.
  ActivityTrack merged() const;
  std::map<ActivityLabel, Duration> durations_by_label() const;

  friend bool operator==(const ActivityTrack&, const ActivityTrack&) = default;

 private:
  Timestamp begin_{};
  Timestamp end_{};
  std::vector<ActivityInterval> intervals_;
};

const ActivityLabel& track_label_at(const ActivityTrack& track, Timestamp t);

struct LabeledDataset {
  EventStream stream;
  ActivityTrack truth;
  /// Sorted, unique, always contains Other.
  std::vector<ActivityLabel> label_set;

  bool empty() const noexcept { return stream.empty(); }
};

/// Assembles a dataset, computing label_set from the truth plus `extra_labels`.
/// Throws DataError if the truth does not cover every event.
LabeledDataset make_dataset(EventStream stream, ActivityTrack truth,
                            std::span<const ActivityLabel> extra_labels = {});

/// One dataset per calendar day that has events, in date order. Each day's
/// truth is the input truth restricted to that day; label_set is shared.
std::vector<LabeledDataset> partition_by_day(const LabeledDataset& dataset);

}  // namespace segdecomp
