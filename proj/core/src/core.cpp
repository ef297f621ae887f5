#include "segdecomp/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "segdecomp/errors.hpp"

namespace segdecomp {

namespace chr = std::chrono;

Duration seconds_to_duration(double seconds) {
  return Duration{static_cast<std::int64_t>(std::llround(seconds * 1e6))};
}

double to_seconds(Duration d) { return static_cast<double>(d.count()) / 1e6; }

CivilDate civil_date(Timestamp t) { return CivilDate{chr::floor<chr::days>(t)}; }

Timestamp start_of_day(CivilDate date) {
  return Timestamp{chr::local_days{date}.time_since_epoch()};
}

Timestamp make_timestamp(int year, unsigned month, unsigned day, unsigned hour,
                         unsigned minute, unsigned second, std::int64_t micros) {
  const CivilDate date{chr::year{year}, chr::month{month}, chr::day{day}};
  return start_of_day(date) + chr::hours{hour} + chr::minutes{minute} + chr::seconds{second} +
         Duration{micros};
}

namespace {

std::string format_with(Timestamp t, char separator) {
  const auto day = chr::floor<chr::days>(t);
  const CivilDate date{day};
  const std::int64_t us = (t - day).count();
  const std::int64_t secs = us / 1'000'000;
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u%c%02lld:%02lld:%02lld.%06lld",
                static_cast<int>(date.year()), static_cast<unsigned>(date.month()),
                static_cast<unsigned>(date.day()), separator,
                static_cast<long long>(secs / 3600), static_cast<long long>(secs / 60 % 60),
                static_cast<long long>(secs % 60), static_cast<long long>(us % 1'000'000));
  return buf;
}

bool parse_uint(std::string_view text, std::size_t width, unsigned& out) {
  if (text.size() != width) return false;
  for (char c : text)
    if (c < '0' || c > '9') return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

}  // namespace

std::string format_timestamp(Timestamp t) { return format_with(t, ' '); }
std::string format_iso(Timestamp t) { return format_with(t, 'T'); }

std::string format_date(CivilDate date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

std::optional<Timestamp> parse_timestamp(std::string_view date, std::string_view time) {
  unsigned y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (date.size() != 10 || date[4] != '-' || date[7] != '-') return std::nullopt;
  if (!parse_uint(date.substr(0, 4), 4, y) || !parse_uint(date.substr(5, 2), 2, mo) ||
      !parse_uint(date.substr(8, 2), 2, d))
    return std::nullopt;
  const CivilDate ymd{chr::year{static_cast<int>(y)}, chr::month{mo}, chr::day{d}};
  if (!ymd.ok()) return std::nullopt;

  if (time.size() < 8 || time[2] != ':' || time[5] != ':') return std::nullopt;
  if (!parse_uint(time.substr(0, 2), 2, h) || !parse_uint(time.substr(3, 2), 2, mi) ||
      !parse_uint(time.substr(6, 2), 2, s))
    return std::nullopt;
  if (h > 23 || mi > 59 || s > 59) return std::nullopt;

  std::int64_t micros = 0;
  if (time.size() > 8) {
    if (time[8] != '.') return std::nullopt;
    const auto frac = time.substr(9);
    if (frac.empty() || frac.size() > 6) return std::nullopt;
    unsigned value = 0;
    if (!parse_uint(frac, frac.size(), value)) return std::nullopt;
    micros = value;
    for (std::size_t i = frac.size(); i < 6; ++i) micros *= 10;
  }
  return start_of_day(ymd) + chr::hours{h} + chr::minutes{mi} + chr::seconds{s} +
         Duration{micros};
}

std::optional<Timestamp> parse_iso(std::string_view text) {
  if (text.size() < 19 || (text[10] != 'T' && text[10] != ' ')) return std::nullopt;
  return parse_timestamp(text.substr(0, 10), text.substr(11));
}

EventStream::EventStream(std::vector<SensorEvent> events) : events_(std::move(events)) {
  for (std::size_t i = 0; i < events_.size(); ++i) {
    if (events_[i].sensor_id.empty() || events_[i].value.empty())
      throw DataError("event " + std::to_string(i) + " has an empty sensor id or value");
  }
  std::stable_sort(events_.begin(), events_.end(),
                   [](const SensorEvent& a, const SensorEvent& b) { return a.at < b.at; });
}

std::vector<StreamViolation> validate_stream(std::span<const SensorEvent> events) {
  std::vector<StreamViolation> out;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (i > 0 && e.at < events[i - 1].at)
      out.push_back({i, ViolationKind::kOutOfOrder,
                     "timestamp " + format_timestamp(e.at) + " precedes " +
                         format_timestamp(events[i - 1].at)});
    if (e.sensor_id.empty()) out.push_back({i, ViolationKind::kEmptySensorId, "empty sensor id"});
    if (e.value.empty()) out.push_back({i, ViolationKind::kEmptyValue, "empty value"});
  }
  return out;
}

ActivityTrack::ActivityTrack(Timestamp begin, Timestamp end, std::vector<ActivityInterval> intervals)
    : begin_(begin), end_(end), intervals_(std::move(intervals)) {
  if (end_ < begin_) throw std::invalid_argument("track domain end precedes begin");
  Timestamp cursor = begin_;
  for (const auto& iv : intervals_) {
    if (!(iv.start < iv.end))
      throw std::invalid_argument("interval '" + iv.label + "' is empty or reversed");
    if (iv.start != cursor)
      throw std::invalid_argument("intervals do not tile the domain at " + format_iso(cursor));
    cursor = iv.end;
  }
  if (cursor != end_) throw std::invalid_argument("intervals stop before the domain end");
}

ActivityTrack ActivityTrack::tile(Timestamp begin, Timestamp end, std::vector<ActivityInterval> sparse) {
  std::vector<ActivityInterval> out;
  Timestamp cursor = begin;
  auto push = [&out](const ActivityLabel& label, Timestamp s, Timestamp e) {
    if (!(s < e)) return;
    if (!out.empty() && out.back().label == label && out.back().end == s) {
      out.back().end = e;
    } else {
      out.push_back({label, s, e});
    }
  };
  const ActivityLabel other{kOtherLabel};
  for (auto& iv : sparse) {
    const Timestamp s = std::max(iv.start, begin);
    const Timestamp e = std::min(iv.end, end);
    if (!(s < e)) continue;
    if (s < cursor) throw std::invalid_argument("sparse intervals overlap or are unsorted");
    push(other, cursor, s);
    push(iv.label, s, e);
    cursor = e;
  }
  push(other, cursor, end);
  return ActivityTrack(begin, end, std::move(out));
}

std::size_t ActivityTrack::interval_index_at(Timestamp t) const {
  if (t < begin_ || !(t < end_))
    throw std::out_of_range("timestamp " + format_iso(t) + " outside track domain");
  auto it = std::upper_bound(intervals_.begin(), intervals_.end(), t,
                             [](Timestamp value, const ActivityInterval& iv) { return value < iv.start; });
  return static_cast<std::size_t>(std::distance(intervals_.begin(), it)) - 1;
}

const ActivityLabel& ActivityTrack::label_at(Timestamp t) const {
  return intervals_[interval_index_at(t)].label;
}

ActivityTrack ActivityTrack::restrict(Timestamp begin, Timestamp end) const {
  const Timestamp b = std::max(begin, begin_);
  const Timestamp e = std::max(b, std::min(end, end_));
  std::vector<ActivityInterval> out;
  for (const auto& iv : intervals_) {
    const Timestamp s = std::max(iv.start, b);
    const Timestamp f = std::min(iv.end, e);
    if (s < f) out.push_back({iv.label, s, f});
  }
  return ActivityTrack(b, e, std::move(out));
}

ActivityTrack ActivityTrack::merged() const {
  return tile(begin_, end_, intervals_);
}

std::map<ActivityLabel, Duration> ActivityTrack::durations_by_label() const {
  std::map<ActivityLabel, Duration> out;
  for (const auto& iv : intervals_) out[iv.label] += iv.duration();
  return out;
}

const ActivityLabel& track_label_at(const ActivityTrack& track, Timestamp t) {
  return track.label_at(t);
}

LabeledDataset make_dataset(EventStream stream, ActivityTrack truth,
                            std::span<const ActivityLabel> extra_labels) {
  if (!stream.empty() &&
      (stream.first_time() < truth.begin() || !(stream.last_time() < truth.end())))
    throw DataError("truth track does not cover the event stream");
  std::vector<ActivityLabel> labels{ActivityLabel{kOtherLabel}};
  for (const auto& iv : truth.intervals()) labels.push_back(iv.label);
  labels.insert(labels.end(), extra_labels.begin(), extra_labels.end());
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  return LabeledDataset{std::move(stream), std::move(truth), std::move(labels)};
}

std::vector<LabeledDataset> partition_by_day(const LabeledDataset& dataset) {
  std::vector<LabeledDataset> out;
  const auto events = dataset.stream.events();
  std::size_t i = 0;
  while (i < events.size()) {
    const CivilDate date = civil_date(events[i].at);
    const Timestamp day_begin = start_of_day(date);
    const Timestamp day_end = day_begin + chr::days{1};
    std::size_t j = i;
    while (j < events.size() && events[j].at < day_end) ++j;
    std::vector<SensorEvent> day_events(events.begin() + static_cast<std::ptrdiff_t>(i),
                                        events.begin() + static_cast<std::ptrdiff_t>(j));
    auto truth = dataset.truth.restrict(day_begin, day_end);
    out.push_back(LabeledDataset{EventStream(std::move(day_events)), std::move(truth),
                                 dataset.label_set});
    i = j;
  }
  return out;
}

}  // namespace segdecomp
