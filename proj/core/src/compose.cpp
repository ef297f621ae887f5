#include "segdecomp/compose.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

#include "segdecomp/errors.hpp"

namespace segdecomp {

namespace {

std::vector<std::size_t> canonical_order(std::span<const Segment> segments,
                                         std::span<const PredictionDistribution> predictions) {
  std::vector<std::size_t> order(segments.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = segments[a];
    const auto& y = segments[b];
    if (x.start != y.start) return x.start < y.start;
    if (x.end != y.end) return x.end < y.end;
    if (x.first != y.first) return x.first < y.first;
    if (x.last != y.last) return x.last < y.last;
    return predictions[a].probabilities < predictions[b].probabilities;
  });
  return order;
}

}  // namespace

ActivityTrack compose(std::span<const Segment> segments, std::span<const PredictionDistribution> predictions,
                      std::span<const ActivityLabel> classes, Timestamp begin, Timestamp end,
                      const ComposerConfig& config) {
  if (segments.size() != predictions.size())
    throw std::invalid_argument("compose: " + std::to_string(segments.size()) + " segments but " +
                                std::to_string(predictions.size()) + " predictions");
  if (end < begin) throw std::invalid_argument("compose: domain end precedes begin");
  const Duration slice = seconds_to_duration(config.slice_seconds);
  if (slice.count() <= 0) throw std::invalid_argument("compose: slice must be positive");
  const std::size_t k = classes.size();
  for (const auto& p : predictions)
    if (!p.probabilities.empty() && p.probabilities.size() != k)
      throw std::invalid_argument("compose: prediction size does not match the class list");
  if (begin == end) return ActivityTrack(begin, end, {});

  const auto span_us = (end - begin).count();
  const auto slice_us = slice.count();
  const auto n_slices = static_cast<std::size_t>((span_us + slice_us - 1) / slice_us);
  auto slice_begin = [&](std::size_t i) { return begin + slice * static_cast<std::int64_t>(i); };
  auto slice_end = [&](std::size_t i) { return std::min(end, slice_begin(i + 1)); };

  std::vector<double> votes(n_slices * k, 0.0);
  std::vector<double> peak;
  if (config.tie_break == TieBreak::kHigherConfidence) peak.assign(n_slices * k, 0.0);
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> first_voter(n_slices, kNone);

  for (const std::size_t idx : canonical_order(segments, predictions)) {
    const auto& seg = segments[idx];
    const auto& probs = predictions[idx].probabilities;
    if (probs.empty()) continue;
    const Timestamp s = std::max(seg.start, begin);
    const Timestamp e = std::min(seg.end, end);
    if (!(s < e)) continue;
    const auto lo = static_cast<std::size_t>((s - begin).count() / slice_us);
    const auto hi = static_cast<std::size_t>(((e - begin).count() - 1) / slice_us);
    for (std::size_t i = lo; i <= hi; ++i) {
      const Timestamp a = slice_begin(i);
      const Timestamp b = slice_end(i);
      const double frac = static_cast<double>((std::min(b, e) - std::max(a, s)).count()) /
                          static_cast<double>((b - a).count());
      double* v = &votes[i * k];
      for (std::size_t c = 0; c < k; ++c) v[c] += frac * probs[c];
      if (!peak.empty())
        for (std::size_t c = 0; c < k; ++c) peak[i * k + c] = std::max(peak[i * k + c], probs[c]);
      if (first_voter[i] == kNone) first_voter[i] = idx;
    }
  }

  const ActivityLabel other{kOtherLabel};
  std::vector<ActivityInterval> out;
  for (std::size_t i = 0; i < n_slices; ++i) {
    const ActivityLabel* label = &other;
    if (first_voter[i] != kNone) {
      const double* v = &votes[i * k];
      const double top = *std::max_element(v, v + k);
      std::size_t pick = k;
      double best = -1.0;
      const auto& tie_source = predictions[first_voter[i]].probabilities;
      for (std::size_t c = 0; c < k; ++c) {
        if (v[c] != top) continue;
        const double key = peak.empty() ? tie_source[c] : peak[i * k + c];
        if (key > best) {
          best = key;
          pick = c;
        }
      }
      label = &classes[pick];
    }
    const Timestamp a = slice_begin(i);
    const Timestamp b = slice_end(i);
    if (!out.empty() && out.back().label == *label) {
      out.back().end = b;
    } else {
      out.push_back({*label, a, b});
    }
  }
  return ActivityTrack(begin, end, std::move(out));
}

ActivityTrack meta_compose(std::span<const ActivityTrack> tracks) {
  std::vector<ActivityInterval> sparse;
  std::optional<Timestamp> begin;
  Timestamp cursor{};
  for (const auto& t : tracks) {
    if (t.empty()) continue;
    if (begin && t.begin() < cursor)
      throw std::invalid_argument("meta_compose: track starting " + format_iso(t.begin()) +
                                  " overlaps or precedes its predecessor");
    if (!begin) begin = t.begin();
    sparse.insert(sparse.end(), t.intervals().begin(), t.intervals().end());
    cursor = t.end();
  }
  if (!begin) return {};
  return ActivityTrack::tile(*begin, cursor, std::move(sparse));
}

void write_track(std::ostream& out, const ActivityTrack& track) {
  for (const auto& iv : track.intervals())
    out << iv.label << '\t' << format_iso(iv.start) << '\t' << format_iso(iv.end) << '\n';
}

ActivityTrack read_track(std::istream& in) {
  std::vector<ActivityInterval> intervals;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw ParseError(line_no, "expected label<TAB>start<TAB>end");
    auto s = parse_iso(std::string_view(line).substr(t1 + 1, t2 - t1 - 1));
    auto e = parse_iso(std::string_view(line).substr(t2 + 1));
    if (!s || !e) throw ParseError(line_no, "bad timestamp");
    intervals.push_back({line.substr(0, t1), *s, *e});
  }
  if (intervals.empty()) return {};
  const Timestamp b = intervals.front().start;
  const Timestamp e = intervals.back().end;
  try {
    return ActivityTrack(b, e, std::move(intervals));
  } catch (const std::invalid_argument& err) {
    throw DataError(std::string("track file does not tile its domain: ") + err.what());
  }
}

}  // namespace segdecomp
