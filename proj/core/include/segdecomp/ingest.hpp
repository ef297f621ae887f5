#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segdecomp/core.hpp"

namespace segdecomp {

/// Parses the CASAS line format
///
///   DATE TIME SENSOR VALUE [ACTIVITY LABEL... begin|end]
///
/// into a dataset whose truth is built from the begin/end pairs. Time outside
/// every annotated activity is labelled Other. When a begin arrives while
/// another activity is open, the most recently begun activity owns the
/// overlap and a warning is appended to `warnings` (if given).
///
/// Throws ParseError on malformed lines and AnnotationError on an end without
/// a begin or a begin that is never closed.
LabeledDataset parse_casas(std::istream& in, std::vector<std::string>* warnings = nullptr);
LabeledDataset parse_casas(std::string_view text, std::vector<std::string>* warnings = nullptr);

/// Writes events in CASAS layout. Each non-Other interval is annotated with
/// `begin` on its first event and `end` on its last event; intervals that
/// contain no event are not representable and are skipped.
void write_casas(std::ostream& out, const LabeledDataset& dataset);

/// Lower-cased sensor id followed by the lower-cased value, whitespace removed.
std::string encode_token(const SensorEvent& event);

/// Maps events to token text. Verbatim by default; optionally numeric sensors
/// with many distinct readings are reduced to their decile bin.
class TokenEncoder {
 public:
  TokenEncoder() = default;

  /// Fits decile cut points for every sensor whose values are all numeric and
  /// that has more than `min_distinct` distinct values.
  static TokenEncoder with_decile_bins(std::span<const EventStream> streams,
                                       std::size_t min_distinct = 10);

  std::string encode(const SensorEvent& event) const;
  bool bins_sensor(std::string_view sensor_id) const { return cuts_.count(std::string(sensor_id)) > 0; }
  const std::map<std::string, std::vector<double>>& cut_points() const { return cuts_; }

 private:
  std::map<std::string, std::vector<double>> cuts_;
};

/// Token text -> index in 1..N, ordered by descending corpus frequency with
/// lexicographic tie-break. Index 0 is reserved and never assigned.
class Vocabulary {
 public:
  Vocabulary() = default;
  /// `ordered_tokens[i]` receives index i + 1.
  explicit Vocabulary(std::vector<std::string> ordered_tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  /// 0 for unknown tokens.
  std::uint32_t index_of(std::string_view token) const;
  const std::string& text_of(std::uint32_t index) const { return tokens_.at(index - 1); }
  std::span<const std::string> tokens() const noexcept { return tokens_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, std::uint32_t, std::less<>> index_;
};

/// Throws DataError when the corpus has no events.
Vocabulary build_vocabulary(std::span<const EventStream> streams, const TokenEncoder& encoder = {});

/// Token texts produced by more than one distinct (sensor, value) pair.
std::map<std::string, std::vector<std::pair<std::string, std::string>>> find_token_collisions(
    std::span<const EventStream> streams);

/// Token index per event (0 when out of vocabulary).
std::vector<std::uint32_t> index_stream(const EventStream& stream, const Vocabulary& vocab,
                                        const TokenEncoder& encoder = {});

struct ActivityProfile {
  ActivityLabel label;
  double mean_duration_seconds = 60.0;
  double events_per_minute = 1.0;
  /// A noise arrival during this activity emits this many noise events from
  /// one noise sensor, noise_burst_spacing_seconds apart.
  std::size_t noise_burst_events = 1;
  double noise_burst_spacing_seconds = 1.0;
  std::vector<std::string> sensors;
  std::vector<std::string> values{"ON", "OFF"};
};

/// A named mix of activity profiles; weights align with SynthConfig::profiles.
struct Regime {
  std::string name;
  std::vector<double> weights;
};

inline constexpr std::string_view kSilentRegime = "silent";

struct SynthConfig {
  CivilDate start_date{std::chrono::year{2010}, std::chrono::month{11}, std::chrono::day{1}};
  std::size_t n_days = 1;
  std::vector<ActivityProfile> profiles;
  std::vector<Regime> regimes;
  /// Regime name per day; "silent" days have no events and are all Other.
  /// Shorter than n_days: the schedule repeats.
  std::vector<std::string> schedule;
  /// Sensors shared by every activity, fired with probability noise_fraction.
  std::vector<std::string> noise_sensors;
  double noise_fraction = 0.0;
  std::uint64_t seed = 1;
};

/// Throws ConfigError when the config is inconsistent.
void validate(const SynthConfig& config);

/// Bookkeeping kept by the generator, independent of the produced truth track.
struct SynthLedger {
  std::vector<std::string> day_regime;
  /// Per day: the durations (seconds) of the activities started that day.
  std::vector<std::vector<double>> day_activity_seconds;
  std::map<ActivityLabel, double> label_seconds;
};

/// Deterministic for a fixed seed. Activities are drawn back to back from the
/// day's regime mix; within an activity events follow a Poisson process
/// (exponential gaps) with the first event at the activity start.
LabeledDataset synth_generate(const SynthConfig& config, SynthLedger* ledger = nullptr);

struct LabelStats {
  Duration total{0};
  std::size_t intervals = 0;
  /// Interval counts per duration bucket, see DatasetStats::bucket_upper_seconds.
  std::vector<std::size_t> duration_histogram;
};

struct DatasetStats {
  std::size_t event_count = 0;
  std::size_t sensor_count = 0;
  std::size_t day_count = 0;
  std::map<std::string, std::size_t> events_per_sensor;
  std::map<ActivityLabel, LabelStats> labels;
  Duration domain{0};
  /// Upper bounds of the duration buckets; the last bucket is open ended.
  static constexpr double bucket_upper_seconds[] = {60, 300, 900, 3600, 14400};
};

DatasetStats dataset_stats(const LabeledDataset& dataset);
void print_stats(std::ostream& out, const DatasetStats& stats);

}  // namespace segdecomp
