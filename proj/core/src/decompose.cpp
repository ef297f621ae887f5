#include "segdecomp/decompose.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>

#include "segdecomp/errors.hpp"

namespace segdecomp {

namespace {

std::string format_number(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void check(const TimeWindowParams& p) {
  if (!(p.window_seconds > 0) || !(p.shift_seconds > 0))
    throw ConfigError("tw window and shift must be positive");
  if (p.shift_seconds > p.window_seconds) throw ConfigError("tw shift must not exceed the window");
  if (seconds_to_duration(p.shift_seconds).count() <= 0)
    throw ConfigError("tw shift is below one microsecond");
}

void check(const EventWindowParams& p) {
  if (p.window_events == 0 || p.shift_events == 0) throw ConfigError("ew window and shift must be positive");
  if (p.shift_events > p.window_events) throw ConfigError("ew shift must not exceed the window");
}

void check(const DynamicWindowParams& p) {
  if (!(p.gap_quantile > 0) || p.gap_quantile > 1) throw ConfigError("dw gap_quantile must lie in (0, 1]");
  if (p.min_events == 0 || p.max_events == 0) throw ConfigError("dw event bounds must be positive");
  if (p.min_events > p.max_events) throw ConfigError("dw min_events must not exceed max_events");
}

Segment span_segment(const EventStream& stream, std::size_t first, std::size_t last) {
  return Segment{first, last, stream[first].at, stream[last - 1].at + Duration{1}};
}

}  // namespace

DecomposerConfig::DecomposerConfig(Params params) : params_(std::move(params)) {
  std::visit([](const auto& p) { check(p); }, params_);
}

DecomposerConfig DecomposerConfig::tw(double window_seconds, double shift_seconds) {
  return DecomposerConfig(TimeWindowParams{window_seconds, shift_seconds});
}

DecomposerConfig DecomposerConfig::ew(std::size_t window_events, std::size_t shift_events) {
  return DecomposerConfig(EventWindowParams{window_events, shift_events});
}

DecomposerConfig DecomposerConfig::dw(double gap_quantile, std::size_t min_events, std::size_t max_events) {
  return DecomposerConfig(DynamicWindowParams{gap_quantile, min_events, max_events});
}

std::string_view kind_name(DecomposerKind kind) {
  switch (kind) {
    case DecomposerKind::kTimeWindow: return "tw";
    case DecomposerKind::kEventWindow: return "ew";
    case DecomposerKind::kDynamicWindow: return "dw";
  }
  return "?";
}

std::string DecomposerConfig::to_string() const {
  struct Printer {
    std::string operator()(const TimeWindowParams& p) const {
      return "tw:w=" + format_number(p.window_seconds) + ",s=" + format_number(p.shift_seconds);
    }
    std::string operator()(const EventWindowParams& p) const {
      return "ew:w=" + std::to_string(p.window_events) + ",s=" + std::to_string(p.shift_events);
    }
    std::string operator()(const DynamicWindowParams& p) const {
      return "dw:q=" + format_number(p.gap_quantile) + ",min=" + std::to_string(p.min_events) +
             ",max=" + std::to_string(p.max_events);
    }
  };
  return std::visit(Printer{}, params_);
}

DecomposerConfig DecomposerConfig::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ConfigError("decomposer '" + std::string(text) + "' lacks 'kind:'");
  const auto kind = text.substr(0, colon);
  std::map<std::string, double, std::less<>> fields;
  auto rest = text.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto item = rest.substr(0, comma);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw ConfigError("decomposer field '" + std::string(item) + "' lacks '='");
    double v = 0;
    const auto val = item.substr(eq + 1);
    auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
    if (ec != std::errc{} || ptr != val.data() + val.size())
      throw ConfigError("decomposer field '" + std::string(item) + "' is not numeric");
    fields[std::string(item.substr(0, eq))] = v;
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
  }
  auto get = [&](std::string_view key, std::optional<double> fallback = std::nullopt) {
    auto it = fields.find(key);
    if (it != fields.end()) return it->second;
    if (fallback) return *fallback;
    throw ConfigError("decomposer '" + std::string(text) + "' is missing '" + std::string(key) + "'");
  };
  auto count = [&](std::string_view key, std::optional<double> fallback = std::nullopt) {
    const double v = get(key, fallback);
    if (v < 0 || v != std::floor(v)) throw ConfigError("decomposer field '" + std::string(key) + "' must be a count");
    return static_cast<std::size_t>(v);
  };
  if (kind == "tw") return tw(get("w"), get("s", get("w")));
  if (kind == "ew") return ew(count("w"), count("s", get("w")));
  if (kind == "dw") return dw(get("q"), count("min", 3.0), count("max", 30.0));
  throw ConfigError("unknown decomposer kind '" + std::string(kind) + "'");
}

std::vector<Segment> tw_decompose(const EventStream& stream, double window_seconds, double shift_seconds) {
  check(TimeWindowParams{window_seconds, shift_seconds});
  if (stream.empty()) throw DataError("cannot decompose an empty stream");
  const Duration window = seconds_to_duration(window_seconds);
  const Duration shift = seconds_to_duration(shift_seconds);
  const auto events = stream.events();
  const Timestamp t0 = stream.first_time();
  const Timestamp t_last = stream.last_time();

  std::vector<Segment> out;
  std::size_t lo = 0;
  std::size_t hi = 0;
  for (Timestamp start = t0; start <= t_last; start += shift) {
    const Timestamp end = start + window;
    while (lo < events.size() && events[lo].at < start) ++lo;
    hi = std::max(hi, lo);
    while (hi < events.size() && events[hi].at < end) ++hi;
    out.push_back(Segment{lo, hi, start, end});
  }
  return out;
}

std::vector<Segment> ew_decompose(const EventStream& stream, std::size_t window_events, std::size_t shift_events) {
  check(EventWindowParams{window_events, shift_events});
  if (stream.empty()) throw DataError("cannot decompose an empty stream");
  const std::size_t n = stream.size();
  std::vector<Segment> out;
  std::size_t covered = 0;
  for (std::size_t first = 0; first < n && covered < n; first += shift_events) {
    const std::size_t last = std::min(n, first + window_events);
    if (last <= covered) break;
    out.push_back(span_segment(stream, first, last));
    covered = last;
  }
  return out;
}

Duration gap_quantile(const EventStream& stream, double q) {
  if (stream.size() < 2) return Duration{0};
  std::vector<Duration> gaps;
  gaps.reserve(stream.size() - 1);
  for (std::size_t i = 1; i < stream.size(); ++i) gaps.push_back(stream[i].at - stream[i - 1].at);
  const auto n = gaps.size();
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(rank - 1), gaps.end());
  return gaps[rank - 1];
}

std::vector<Segment> dw_decompose(const EventStream& stream, const DynamicWindowParams& params) {
  check(params);
  if (stream.empty()) throw DataError("cannot decompose an empty stream");
  const std::size_t n = stream.size();
  if (n < params.min_events) return {span_segment(stream, 0, n)};
  const Duration threshold = gap_quantile(stream, params.gap_quantile);

  std::vector<Segment> out;
  std::size_t first = 0;
  while (first < n) {
    std::size_t last = first + 1;
    while (last < n) {
      const std::size_t size = last - first;
      if (size >= params.max_events) break;
      if (size >= params.min_events && stream[last].at - stream[last - 1].at > threshold) break;
      ++last;
    }
    out.push_back(span_segment(stream, first, last));
    first = last;
  }
  return out;
}

std::vector<Segment> decompose(const EventStream& stream, const DecomposerConfig& config) {
  struct Runner {
    const EventStream& s;
    std::vector<Segment> operator()(const TimeWindowParams& p) const {
      return tw_decompose(s, p.window_seconds, p.shift_seconds);
    }
    std::vector<Segment> operator()(const EventWindowParams& p) const {
      return ew_decompose(s, p.window_events, p.shift_events);
    }
    std::vector<Segment> operator()(const DynamicWindowParams& p) const { return dw_decompose(s, p); }
  };
  return std::visit(Runner{stream}, config.params());
}

DecomposabilityReport check_decomposability(double composed_loss, double original_loss, double epsilon) {
  constexpr double tol = 1e-9;
  const double diff = composed_loss - original_loss;
  return DecomposabilityReport{composed_loss, original_loss, epsilon, diff <= epsilon + tol, diff <= tol};
}

}  // namespace segdecomp
