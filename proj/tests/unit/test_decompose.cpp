#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "segdecomp/decompose.hpp"
#include "segdecomp/errors.hpp"
#include "segdecomp/meta.hpp"

using namespace segdecomp;

namespace {

const Timestamp t0 = make_timestamp(2010, 11, 4, 8);

EventStream at_seconds(std::initializer_list<double> secs) {
  std::vector<SensorEvent> ev;
  for (double s : secs) ev.push_back({t0 + seconds_to_duration(s), "M1", "ON"});
  return EventStream(std::move(ev));
}

EventStream every_second(std::size_t n, double step = 1) {
  std::vector<SensorEvent> ev;
  for (std::size_t i = 0; i < n; ++i) ev.push_back({t0 + seconds_to_duration(step * i), "M1", "ON"});
  return EventStream(std::move(ev));
}

// Membership counts by brute force: event i is in segment k iff first <= i < last.
std::vector<int> coverage(const std::vector<Segment>& segs, std::size_t n) {
  std::vector<int> c(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& s : segs) c[i] += (s.first <= i && i < s.last);
  return c;
}

}  // namespace

TEST_CASE("tw_decompose arithmetic") {
  const auto s = every_second(13, 10);  // t = 0, 10, ..., 120
  const auto w = tw_decompose(s, 60, 60);
  REQUIRE(w.size() == 3);
  CHECK(w[0].start == t0);
  CHECK(w[2].start == t0 + std::chrono::seconds(120));
  CHECK(w[2].end == t0 + std::chrono::seconds(180));
  CHECK(w[0].first == 0);
  CHECK(w[0].last == 6);
  CHECK(w[2].first == 12);
  CHECK(w[2].last == 13);

  const auto o = tw_decompose(s, 60, 30);
  const auto c = coverage(o, s.size());
  for (std::size_t i = 3; i + 3 < s.size(); ++i) CHECK(c[i] == 2);
  CHECK(o[1].start - o[0].start == std::chrono::seconds(30));

  // Silent windows are kept and empty.
  const auto gap = tw_decompose(at_seconds({0, 200}), 60, 60);
  REQUIRE(gap.size() == 4);
  CHECK(gap[1].empty());
  CHECK(gap[3].event_count() == 1);
  CHECK_THROWS_AS(tw_decompose(EventStream{}, 60, 60), DataError);
}

TEST_CASE("tw_decompose contents match brute-force membership") {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 20; ++round) {
    const auto s = oracle::random_stream(rng, t0, 3000, 400);
    const auto segs = tw_decompose(s, 50, 40);
    for (const auto& seg : segs) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        const bool inside = seg.start <= s[i].at && s[i].at < seg.start + std::chrono::seconds(50);
        CHECK(inside == (seg.first <= i && i < seg.last));
      }
    }
    for (int c : coverage(segs, s.size())) CHECK(c >= 1);
  }
}

TEST_CASE("ew_decompose arithmetic") {
  auto ranges = [](const std::vector<Segment>& v) {
    std::vector<std::pair<std::size_t, std::size_t>> r;
    for (const auto& s : v) r.emplace_back(s.first, s.last);
    return r;
  };
  using R = std::vector<std::pair<std::size_t, std::size_t>>;
  CHECK(ranges(ew_decompose(every_second(5), 3, 2)) == R{{0, 3}, {2, 5}});
  CHECK(ranges(ew_decompose(every_second(9), 5, 2)) == R{{0, 5}, {2, 7}, {4, 9}});
  CHECK(ranges(ew_decompose(every_second(7), 3, 3)) == R{{0, 3}, {3, 6}, {6, 7}});
  CHECK(ranges(ew_decompose(every_second(2), 5, 5)) == R{{0, 2}});

  const auto seg = ew_decompose(every_second(5), 3, 2);
  CHECK(seg[0].start == t0);
  CHECK(seg[0].end == t0 + std::chrono::seconds(2) + Duration{1});

  std::mt19937_64 rng(9);
  for (int round = 0; round < 30; ++round) {
    const auto s = oracle::random_stream(rng, t0, 3000, 1 + rng() % 300);
    const std::size_t w = 1 + rng() % 20;
    const std::size_t sh = 1 + rng() % w;
    for (int c : coverage(ew_decompose(s, w, sh), s.size())) CHECK(c >= 1);
  }
}

TEST_CASE("dw_decompose") {
  const auto uniform = every_second(20);
  const auto segs = dw_decompose(uniform, {0.95, 3, 4});
  REQUIRE(segs.size() == 5);
  for (const auto& s : segs) CHECK(s.event_count() == 4);

  const auto silent = at_seconds({0, 1, 2, 3, 4, 3604, 3605, 3606, 3607});
  const auto cut = dw_decompose(silent, {0.5, 3, 30});
  REQUIRE(cut.size() == 2);
  CHECK(cut[0].last == 5);
  CHECK(cut[1].first == 5);

  std::mt19937_64 rng(13);
  for (int round = 0; round < 30; ++round) {
    std::vector<SensorEvent> ev;
    auto t = t0;
    for (int b = 0; b < 20; ++b) {
      t += std::chrono::seconds(30 + rng() % 600);
      for (std::size_t i = 0; i < 1 + rng() % 12; ++i) ev.push_back({t += std::chrono::seconds(1 + rng() % 3), "M", "ON"});
    }
    const EventStream s(std::move(ev));
    const auto d = dw_decompose(s, {0.9, 2, 8});
    const auto c = coverage(d, s.size());
    for (int x : c) CHECK(x == 1);
    for (const auto& seg : d) CHECK(seg.event_count() <= 8);
  }
  CHECK(dw_decompose(at_seconds({0, 1}), {0.9, 3, 5}).size() == 1);
}

TEST_CASE("gap quantile") {
  CHECK(gap_quantile(at_seconds({0}), 0.9) == Duration{0});
  CHECK(gap_quantile(at_seconds({0, 1, 3, 6, 10}), 0.5) == std::chrono::seconds(2));
  CHECK(gap_quantile(at_seconds({0, 1, 3, 6, 10}), 1.0) == std::chrono::seconds(4));
}

TEST_CASE("decomposer configs parse and print canonically") {
  for (const char* text : {"tw:w=60,s=30", "ew:w=5,s=2", "dw:q=0.95,min=3,max=30"})
    CHECK(DecomposerConfig::parse(text).to_string() == text);
  CHECK(DecomposerConfig::parse("ew:w=5,s=2") == DecomposerConfig::ew(5, 2));
  CHECK(DecomposerConfig::parse("tw:w=60,s=30").kind() == DecomposerKind::kTimeWindow);
  CHECK_THROWS_AS(DecomposerConfig::ew(3, 4), ConfigError);
  CHECK_THROWS_AS(DecomposerConfig::tw(0, 0), ConfigError);
  CHECK_THROWS_AS(DecomposerConfig::dw(1.5), ConfigError);
  CHECK_THROWS_AS(DecomposerConfig::dw(0.9, 5, 3), ConfigError);
  CHECK_THROWS_AS(DecomposerConfig::parse("xw:w=3"), ConfigError);
  CHECK_THROWS_AS(DecomposerConfig::parse("ew:s=3"), ConfigError);
  CHECK(DecomposerConfig::parse("ew:w=3") == DecomposerConfig::ew(3, 3));
  CHECK_THROWS_AS(DecomposerConfig::parse("ew:w=x,s=1"), ConfigError);
}

TEST_CASE("default grid covers every event on random streams") {
  std::mt19937_64 rng(21);
  const auto grid = default_decomposer_grid();
  CHECK(grid.size() == 18);
  for (int round = 0; round < 20; ++round) {
    const auto s = oracle::random_stream(rng, t0, 1 + rng() % 7200, 1 + rng() % 500);
    for (const auto& g : grid)
      for (int c : coverage(decompose(s, g), s.size())) CHECK(c >= 1);
  }
}

TEST_CASE("check_decomposability") {
  auto r = check_decomposability(0.30, 0.30, 0);
  CHECK(r.decomposable);
  CHECK(r.strong);
  r = check_decomposability(0.35, 0.30, 0.04);
  CHECK_FALSE(r.decomposable);
  r = check_decomposability(0.35, 0.30, 0.05);
  CHECK(r.decomposable);
  CHECK_FALSE(r.strong);
}
