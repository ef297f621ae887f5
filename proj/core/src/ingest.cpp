#include "segdecomp/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "segdecomp/errors.hpp"

namespace segdecomp {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c)))
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

std::optional<double> parse_number(std::string_view s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

struct Annotation {
  std::string label;
  bool begin = false;
};

struct Record {
  SensorEvent event;
  std::optional<Annotation> note;
  std::size_t line = 0;
};

}  // namespace

LabeledDataset parse_casas(std::istream& in, std::vector<std::string>* warnings) {
  std::vector<Record> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() < 4 || fields.size() == 5)
      throw ParseError(line_no, "expected 'DATE TIME SENSOR VALUE [ACTIVITY begin|end]'");
    auto at = parse_timestamp(fields[0], fields[1]);
    if (!at) throw ParseError(line_no, "bad timestamp '" + std::string(fields[0]) + " " +
                                            std::string(fields[1]) + "'");
    Record rec{SensorEvent{*at, std::string(fields[2]), std::string(fields[3])}, std::nullopt, line_no};
    if (fields.size() > 5) {
      const auto keyword = fields.back();
      const bool is_begin = iequals(keyword, "begin");
      if (!is_begin && !iequals(keyword, "end"))
        throw ParseError(line_no, "annotation must end with 'begin' or 'end'");
      std::string label(fields[4]);
      for (std::size_t k = 5; k + 1 < fields.size(); ++k) {
        label += ' ';
        label += fields[k];
      }
      rec.note = Annotation{std::move(label), is_begin};
    }
    records.push_back(std::move(rec));
  }

  std::stable_sort(records.begin(), records.end(),
                   [](const Record& a, const Record& b) { return a.event.at < b.event.at; });

  struct Open {
    std::string label;
    std::size_t line;
  };
  std::vector<Open> open;
  std::vector<ActivityInterval> sparse;
  Timestamp segment_start{};
  for (const auto& rec : records) {
    if (!rec.note) continue;
    const Timestamp t = rec.event.at;
    if (!open.empty() && segment_start < t) sparse.push_back({open.back().label, segment_start, t});
    segment_start = t;
    const auto& note = *rec.note;
    auto it = std::find_if(open.rbegin(), open.rend(), [&](const Open& o) { return o.label == note.label; });
    if (note.begin) {
      if (it != open.rend()) {
        if (warnings)
          warnings->push_back("line " + std::to_string(rec.line) + ": '" + note.label +
                              "' begins while already open; ignored");
        continue;
      }
      if (!open.empty() && warnings)
        warnings->push_back("line " + std::to_string(rec.line) + ": '" + note.label +
                            "' begins inside '" + open.back().label + "'; latest begin owns the overlap");
      open.push_back({note.label, rec.line});
    } else {
      if (it == open.rend()) throw AnnotationError(note.label, rec.line, "end without matching begin for");
      open.erase(std::next(it).base());
    }
  }
  if (!open.empty()) throw AnnotationError(open.front().label, open.front().line, "unterminated begin for");

  std::vector<SensorEvent> events;
  events.reserve(records.size());
  for (auto& rec : records) events.push_back(std::move(rec.event));
  if (events.empty()) return make_dataset(EventStream{}, ActivityTrack{}, {});
  const Timestamp begin = events.front().at;
  const Timestamp end = events.back().at + Duration{1};
  auto truth = ActivityTrack::tile(begin, end, std::move(sparse));
  return make_dataset(EventStream(std::move(events)), std::move(truth));
}

LabeledDataset parse_casas(std::string_view text, std::vector<std::string>* warnings) {
  std::istringstream in{std::string(text)};
  return parse_casas(in, warnings);
}

void write_casas(std::ostream& out, const LabeledDataset& dataset) {
  const auto events = dataset.stream.events();
  std::vector<std::optional<Annotation>> notes(events.size());
  auto by_time = [&](Timestamp t) {
    auto lo = std::lower_bound(events.begin(), events.end(), t,
                               [](const SensorEvent& e, Timestamp v) { return e.at < v; });
    return static_cast<std::size_t>(lo - events.begin());
  };
  auto free_at = [&](std::size_t from, std::size_t to, bool backwards) -> std::optional<std::size_t> {
    if (backwards) {
      for (std::size_t k = to; k > from; --k)
        if (!notes[k - 1]) return k - 1;
    } else {
      for (std::size_t k = from; k < to; ++k)
        if (!notes[k]) return k;
    }
    return std::nullopt;
  };

  // Intervals are annotated in time order: the begin on the first free event
  // inside, the end on an event at exactly iv.end if one is free (so the
  // boundary survives a round trip), otherwise on the last free event inside.
  for (const auto& iv : dataset.truth.intervals()) {
    if (iv.label == kOtherLabel) continue;
    const std::size_t first = by_time(iv.start);
    const std::size_t inside_end = by_time(iv.end);
    const auto begin_slot = free_at(first, inside_end, false);
    if (!begin_slot) continue;
    std::size_t exact_end = inside_end;
    while (exact_end < events.size() && events[exact_end].at == iv.end) ++exact_end;
    auto end_slot = free_at(inside_end, exact_end, false);
    if (!end_slot) end_slot = free_at(*begin_slot + 1, inside_end, true);
    if (!end_slot) continue;
    notes[*begin_slot] = Annotation{iv.label, true};
    notes[*end_slot] = Annotation{iv.label, false};
  }

  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    out << format_timestamp(e.at) << ' ' << e.sensor_id << ' ' << e.value;
    if (notes[i]) out << ' ' << notes[i]->label << (notes[i]->begin ? " begin" : " end");
    out << '\n';
  }
}

std::string encode_token(const SensorEvent& event) {
  return lower(event.sensor_id) + lower(event.value);
}

TokenEncoder TokenEncoder::with_decile_bins(std::span<const EventStream> streams, std::size_t min_distinct) {
  std::map<std::string, std::vector<double>> values;
  std::set<std::string> non_numeric;
  for (const auto& s : streams) {
    for (const auto& e : s) {
      if (non_numeric.count(e.sensor_id)) continue;
      auto v = parse_number(e.value);
      if (!v) {
        non_numeric.insert(e.sensor_id);
        values.erase(e.sensor_id);
        continue;
      }
      values[e.sensor_id].push_back(*v);
    }
  }
  TokenEncoder enc;
  for (auto& [sensor, vals] : values) {
    std::sort(vals.begin(), vals.end());
    const std::set<double> distinct(vals.begin(), vals.end());
    if (distinct.size() <= min_distinct) continue;
    std::vector<double> cuts;
    const auto n = vals.size();
    for (std::size_t q = 1; q < 10; ++q) cuts.push_back(vals[(n * q) / 10]);
    enc.cuts_[sensor] = std::move(cuts);
  }
  return enc;
}

std::string TokenEncoder::encode(const SensorEvent& event) const {
  if (!cuts_.empty()) {
    auto it = cuts_.find(event.sensor_id);
    if (it != cuts_.end()) {
      if (auto v = parse_number(event.value)) {
        const auto bin = std::upper_bound(it->second.begin(), it->second.end(), *v) - it->second.begin();
        return lower(event.sensor_id) + "#q" + std::to_string(bin);
      }
    }
  }
  return encode_token(event);
}

Vocabulary::Vocabulary(std::vector<std::string> ordered_tokens) : tokens_(std::move(ordered_tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<std::uint32_t>(i + 1)).second)
      throw DataError("duplicate vocabulary token '" + tokens_[i] + "'");
  }
}

std::uint32_t Vocabulary::index_of(std::string_view token) const {
  auto it = index_.find(token);
  return it == index_.end() ? 0 : it->second;
}

Vocabulary build_vocabulary(std::span<const EventStream> streams, const TokenEncoder& encoder) {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : streams)
    for (const auto& e : s) ++counts[encoder.encode(e)];
  if (counts.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
  std::vector<std::pair<std::string, std::size_t>> order(counts.begin(), counts.end());
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  tokens.reserve(order.size());
  for (auto& [text, n] : order) tokens.push_back(text);
  return Vocabulary(std::move(tokens));
}

std::map<std::string, std::vector<std::pair<std::string, std::string>>> find_token_collisions(
    std::span<const EventStream> streams) {
  std::map<std::string, std::set<std::pair<std::string, std::string>>> sources;
  for (const auto& s : streams)
    for (const auto& e : s) sources[encode_token(e)].emplace(e.sensor_id, e.value);
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> out;
  for (auto& [token, pairs] : sources)
    if (pairs.size() > 1) out[token].assign(pairs.begin(), pairs.end());
  return out;
}

std::vector<std::uint32_t> index_stream(const EventStream& stream, const Vocabulary& vocab,
                                        const TokenEncoder& encoder) {
  std::vector<std::uint32_t> out;
  out.reserve(stream.size());
  for (const auto& e : stream) out.push_back(vocab.index_of(encoder.encode(e)));
  return out;
}

void validate(const SynthConfig& config) {
  if (config.n_days == 0) throw ConfigError("synthetic config needs n_days >= 1");
  if (config.profiles.empty()) throw ConfigError("synthetic config needs at least one activity profile");
  for (const auto& p : config.profiles) {
    if (p.label.empty() || p.label == kOtherLabel)
      throw ConfigError("activity profile label must be non-empty and not Other");
    if (!(p.mean_duration_seconds > 0) || !(p.events_per_minute > 0))
      throw ConfigError("activity '" + p.label + "' needs positive duration and event rate");
    if (p.noise_burst_events == 0 || !(p.noise_burst_spacing_seconds > 0))
      throw ConfigError("activity '" + p.label + "' needs noise_burst_events >= 1 and a positive burst spacing");
    if (p.sensors.empty() || p.values.empty())
      throw ConfigError("activity '" + p.label + "' needs sensors and values");
  }
  if (config.regimes.empty()) throw ConfigError("synthetic config needs at least one regime");
  for (const auto& r : config.regimes) {
    if (r.weights.size() != config.profiles.size())
      throw ConfigError("regime '" + r.name + "' weights do not match the profile count");
    double sum = 0;
    for (double w : r.weights) {
      if (w < 0) throw ConfigError("regime '" + r.name + "' has a negative weight");
      sum += w;
    }
    if (!(sum > 0)) throw ConfigError("regime '" + r.name + "' has no positive weight");
  }
  for (const auto& name : config.schedule) {
    if (name == kSilentRegime) continue;
    if (std::none_of(config.regimes.begin(), config.regimes.end(),
                     [&](const Regime& r) { return r.name == name; }))
      throw ConfigError("schedule references unknown regime '" + name + "'");
  }
  if (config.schedule.empty() && config.regimes.size() != 1)
    throw ConfigError("a schedule is required when more than one regime is defined");
  if (config.noise_fraction < 0 || config.noise_fraction > 1)
    throw ConfigError("noise_fraction must lie in [0, 1]");
  if (config.noise_fraction > 0 && config.noise_sensors.empty())
    throw ConfigError("noise_fraction > 0 requires noise_sensors");
}

LabeledDataset synth_generate(const SynthConfig& config, SynthLedger* ledger) {
  validate(config);
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const Timestamp origin = start_of_day(config.start_date);
  const Timestamp horizon = origin + std::chrono::days{static_cast<int>(config.n_days)};
  std::vector<SensorEvent> events;
  std::vector<ActivityInterval> intervals;
  SynthLedger book;

  auto pick = [&](const std::vector<std::string>& from) -> const std::string& {
    return from[std::min(from.size() - 1, static_cast<std::size_t>(unit(rng) * static_cast<double>(from.size())))];
  };

  for (std::size_t d = 0; d < config.n_days; ++d) {
    const std::string& regime_name =
        config.schedule.empty() ? config.regimes.front().name : config.schedule[d % config.schedule.size()];
    book.day_regime.push_back(regime_name);
    book.day_activity_seconds.emplace_back();
    if (regime_name == kSilentRegime) continue;
    const auto& regime = *std::find_if(config.regimes.begin(), config.regimes.end(),
                                       [&](const Regime& r) { return r.name == regime_name; });

    const Timestamp day_begin = origin + std::chrono::days{static_cast<int>(d)};
    const Timestamp day_end = day_begin + std::chrono::days{1};
    Timestamp t = day_begin;
    std::optional<std::size_t> previous;
    while (t < day_end) {
      auto weights = regime.weights;
      if (previous) {
        double others = 0;
        for (std::size_t k = 0; k < weights.size(); ++k)
          if (k != *previous) others += weights[k];
        if (others > 0) weights[*previous] = 0;
      }
      std::discrete_distribution<std::size_t> choose(weights.begin(), weights.end());
      const std::size_t which = choose(rng);
      previous = which;
      const auto& profile = config.profiles[which];

      const double seconds = profile.mean_duration_seconds * (0.5 + unit(rng));
      const Timestamp end = std::min(day_end, t + std::max(Duration{1}, seconds_to_duration(seconds)));
      book.day_activity_seconds.back().push_back(to_seconds(end - t));
      book.label_seconds[profile.label] += to_seconds(end - t);

      std::exponential_distribution<double> gap(profile.events_per_minute / 60.0);
      Timestamp e = t;
      while (e < end) {
        const bool noise = !config.noise_sensors.empty() && unit(rng) < config.noise_fraction;
        const std::string& sensor = noise ? pick(config.noise_sensors) : pick(profile.sensors);
        const std::size_t burst = noise ? profile.noise_burst_events : 1;
        for (std::size_t b = 0; b < burst; ++b) {
          const Timestamp at =
              e + seconds_to_duration(static_cast<double>(b) * profile.noise_burst_spacing_seconds);
          if (at >= end) break;
          events.push_back({at, sensor, pick(profile.values)});
        }
        e += std::max(Duration{1}, seconds_to_duration(gap(rng)));
      }
      intervals.push_back({profile.label, t, end});
      t = end;
    }
  }

  std::vector<ActivityLabel> all_labels;
  for (const auto& p : config.profiles) all_labels.push_back(p.label);
  if (ledger) *ledger = std::move(book);
  auto truth = ActivityTrack::tile(origin, horizon, std::move(intervals));
  return make_dataset(EventStream(std::move(events)), std::move(truth), all_labels);
}

DatasetStats dataset_stats(const LabeledDataset& dataset) {
  DatasetStats stats;
  stats.event_count = dataset.stream.size();
  std::set<CivilDate> days;
  for (const auto& e : dataset.stream) {
    ++stats.events_per_sensor[e.sensor_id];
    days.insert(civil_date(e.at));
  }
  stats.sensor_count = stats.events_per_sensor.size();
  stats.day_count = days.size();
  stats.domain = dataset.truth.duration();
  constexpr std::size_t n_buckets = std::size(DatasetStats::bucket_upper_seconds) + 1;
  for (const auto& iv : dataset.truth.intervals()) {
    auto& ls = stats.labels[iv.label];
    if (ls.duration_histogram.empty()) ls.duration_histogram.assign(n_buckets, 0);
    ls.total += iv.duration();
    ++ls.intervals;
    const double secs = to_seconds(iv.duration());
    std::size_t b = 0;
    while (b + 1 < n_buckets && secs >= DatasetStats::bucket_upper_seconds[b]) ++b;
    ++ls.duration_histogram[b];
  }
  return stats;
}

void print_stats(std::ostream& out, const DatasetStats& stats) {
  out << "events   " << stats.event_count << '\n'
      << "sensors  " << stats.sensor_count << '\n'
      << "days     " << stats.day_count << '\n'
      << "domain   " << std::fixed << std::setprecision(1) << to_seconds(stats.domain) / 3600.0 << " h\n\n";
  out << std::left << std::setw(28) << "label" << std::right << std::setw(10) << "count" << std::setw(12)
      << "hours" << "   <1m <5m <15m <1h <4h >=4h\n";
  for (const auto& [label, ls] : stats.labels) {
    out << std::left << std::setw(28) << label << std::right << std::setw(10) << ls.intervals
        << std::setw(12) << std::setprecision(2) << to_seconds(ls.total) / 3600.0 << "  ";
    for (auto n : ls.duration_histogram) out << ' ' << n;
    out << '\n';
  }
}

}  // namespace segdecomp
