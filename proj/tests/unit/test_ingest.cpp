#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "segdecomp/errors.hpp"
#include "segdecomp/ingest.hpp"

using namespace segdecomp;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SynthConfig regime_shift_config() {
  SynthConfig c;
  c.n_days = 10;
  c.seed = 5;
  c.profiles = {{"Quick", 40, 4, 1, 1, {"Q1", "Q2"}, {"ON", "OFF"}},
                {"Brief", 40, 4, 1, 1, {"Q3"}, {"ON", "OFF"}},
                {"Slow", 1500, 2, 1, 1, {"L1", "L2"}, {"ON", "OFF"}},
                {"Long", 1500, 2, 1, 1, {"L3"}, {"ON", "OFF"}}};
  c.regimes = {{"short", {1, 1, 0, 0}}, {"long", {0, 0, 1, 1}}};
  c.schedule = {"short", "long"};
  return c;
}

}  // namespace

TEST_CASE("parse_casas builds intervals from begin/end pairs") {
  const std::string text =
      "2010-11-04 00:03:50.209589 M003 ON Sleeping begin\n"
      "2010-11-04 00:10:00.000000 M003 OFF\n"
      "2010-11-04 05:40:43.642664 M003 ON Sleeping end\n"
      "2010-11-04 05:41:00 M004 ON\n";
  const auto d = parse_casas(text);
  REQUIRE(d.stream.size() == 4);
  REQUIRE(d.truth.intervals().size() == 2);
  CHECK(d.truth.intervals()[0] == ActivityInterval{"Sleeping", make_timestamp(2010, 11, 4, 0, 3, 50, 209589),
                                                   make_timestamp(2010, 11, 4, 5, 40, 43, 642664)});
  CHECK(d.truth.intervals()[1].label == "Other");
  CHECK(d.label_set == std::vector<ActivityLabel>{"Other", "Sleeping"});
}

TEST_CASE("parse_casas without annotations is all Other") {
  const auto d = parse_casas("2010-11-04 00:00:01 M1 ON\n2010-11-04 00:00:05 M1 OFF\n");
  REQUIRE(d.truth.intervals().size() == 1);
  CHECK(d.truth.intervals()[0].label == "Other");
}

TEST_CASE("parse_casas errors carry line numbers and labels") {
  SUBCASE("malformed line") {
    try {
      parse_casas("2010-11-04 00:00:01 M1 ON\n2010-11-04 M1 ON\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("bad timestamp") { CHECK_THROWS_AS(parse_casas("2010-11-04 00:61:01 M1 ON\n"), ParseError); }
  SUBCASE("bad keyword") { CHECK_THROWS_AS(parse_casas("2010-11-04 00:00:01 M1 ON Cook start\n"), ParseError); }
  SUBCASE("end without begin") {
    try {
      parse_casas("2010-11-04 00:00:01 M1 ON\n2010-11-04 00:00:02 M1 OFF Cook end\n");
      FAIL("expected AnnotationError");
    } catch (const AnnotationError& e) {
      CHECK(e.label() == "Cook");
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("unterminated begin") {
    try {
      parse_casas("2010-11-04 00:00:01 M1 ON Wash Dishes begin\n2010-11-04 00:00:02 M1 OFF\n");
      FAIL("expected AnnotationError");
    } catch (const AnnotationError& e) {
      CHECK(e.label() == "Wash Dishes");
      CHECK(e.line() == 1);
    }
  }
}

TEST_CASE("parse_casas: nested begin gives the overlap to the latest activity") {
  std::vector<std::string> warnings;
  const auto d = parse_casas(
      "2010-11-04 00:00:00 M1 ON A begin\n"
      "2010-11-04 00:00:10 M2 ON B begin\n"
      "2010-11-04 00:00:20 M2 OFF B end\n"
      "2010-11-04 00:00:30 M1 OFF A end\n",
      &warnings);
  CHECK(warnings.size() == 1);
  const auto iv = d.truth.intervals();
  REQUIRE(iv.size() == 4);
  CHECK(iv[0].label == "A");
  CHECK(iv[1].label == "B");
  CHECK(iv[2].label == "A");
  CHECK(iv[2].end == make_timestamp(2010, 11, 4, 0, 0, 30));
}

TEST_CASE("parse_casas: 500-line file, interval count equals begin/end pairs") {
  std::mt19937_64 rng(17);
  const std::vector<std::string> labels{"Sleep", "Cook", "Eat", "Wash Dishes", "Relax", "Work", "Bed to Toilet"};
  std::ostringstream text;
  std::size_t pairs = 0;
  auto t = make_timestamp(2011, 6, 1, 0, 0, 1);
  std::size_t line = 0;
  while (line < 500) {
    // An activity of 3..10 lines, then 1..4 unannotated lines.
    const std::size_t len = 3 + rng() % 8;
    const std::size_t gap = 1 + rng() % 4;
    if (line + len + gap > 500) break;
    const auto& label = labels[rng() % labels.size()];
    for (std::size_t i = 0; i < len; ++i, ++line) {
      t += std::chrono::seconds(1 + rng() % 30);
      text << format_timestamp(t) << " M" << rng() % 9 << " ON";
      if (i == 0) text << ' ' << label << " begin";
      if (i + 1 == len) text << ' ' << label << " end";
      text << '\n';
    }
    ++pairs;
    for (std::size_t i = 0; i < gap; ++i, ++line) {
      t += std::chrono::seconds(1 + rng() % 30);
      text << format_timestamp(t) << " D1 OPEN\n";
    }
  }
  while (line++ < 500) {
    t += std::chrono::seconds(1);
    text << format_timestamp(t) << " D1 CLOSE\n";
  }
  const auto d = parse_casas(text.str());
  CHECK(d.stream.size() == 500);
  std::size_t annotated = 0;
  for (const auto& iv : d.truth.intervals()) annotated += iv.label != "Other";
  CHECK(annotated == pairs);
}

TEST_CASE("write_casas round-trips events and interval boundaries") {
  const auto d = parse_casas(read_file(SEGDECOMP_SAMPLE_DIR "/sample_casas.txt"));
  std::ostringstream out;
  write_casas(out, d);
  const auto again = parse_casas(out.str());
  CHECK(again.stream == d.stream);
  CHECK(again.truth == d.truth);
}

TEST_CASE("encode_token") {
  CHECK(encode_token({{}, "door1", "open"}) == "door1open");
  CHECK(encode_token({{}, "M003", "ON"}) == "m003on");
  CHECK(encode_token({{}, "temp_1", "21.5"}) == "temp_121.5");
  CHECK(encode_token({{}, "Kitchen Door", "Open Wide"}) == "kitchendooropenwide");
}

TEST_CASE("token collisions are reported") {
  const std::vector<EventStream> streams{EventStream({{{}, "a1", "on"}, {{}, "a", "1on"}, {{}, "b", "on"}})};
  const auto c = find_token_collisions(streams);
  REQUIRE(c.size() == 1);
  CHECK(c.begin()->first == "a1on");
  CHECK(c.begin()->second.size() == 2);
}

TEST_CASE("build_vocabulary orders by frequency then text") {
  auto ev = [](const char* s) { return SensorEvent{{}, s, "x"}; };
  const std::vector<EventStream> c1{EventStream({ev("a"), ev("a"), ev("a"), ev("b")})};
  const auto v1 = build_vocabulary(c1);
  CHECK(v1.index_of("ax") == 1);
  CHECK(v1.index_of("bx") == 2);
  CHECK(v1.index_of("zzz") == 0);
  const std::vector<EventStream> c2{EventStream({ev("b"), ev("a"), ev("b"), ev("a")})};
  const auto v2 = build_vocabulary(c2);
  CHECK(v2.index_of("ax") == 1);
  CHECK(v2.index_of("bx") == 2);
  CHECK_THROWS_AS(build_vocabulary(std::vector<EventStream>{}), DataError);

  std::mt19937_64 rng(23);
  std::vector<EventStream> corpus;
  std::map<std::string, int> counts;
  for (int s = 0; s < 4; ++s) {
    const auto stream = oracle::random_stream(rng, make_timestamp(2010, 1, 1), 1000, 300, 15);
    for (const auto& e : stream) ++counts[encode_token(e)];
    corpus.push_back(stream);
  }
  std::vector<std::pair<int, std::string>> order;
  for (const auto& [tok, n] : counts) order.emplace_back(-n, tok);
  std::sort(order.begin(), order.end());
  const auto v = build_vocabulary(corpus);
  REQUIRE(v.size() == order.size());
  for (std::size_t i = 0; i < order.size(); ++i) CHECK(v.text_of(static_cast<std::uint32_t>(i + 1)) == order[i].second);

  std::reverse(corpus.begin(), corpus.end());
  CHECK(build_vocabulary(corpus) == v);
}

TEST_CASE("decile binning of numeric sensors") {
  std::vector<SensorEvent> events;
  for (int i = 0; i < 100; ++i) events.push_back({make_timestamp(2010, 1, 1) + std::chrono::seconds(i), "T1", std::to_string(i)});
  events.push_back({make_timestamp(2010, 1, 1, 1), "M1", "ON"});
  const std::vector<EventStream> streams{EventStream(events)};
  const auto enc = TokenEncoder::with_decile_bins(streams);
  CHECK(enc.bins_sensor("T1"));
  CHECK_FALSE(enc.bins_sensor("M1"));
  CHECK(enc.encode({{}, "M1", "ON"}) == "m1on");
  CHECK(enc.encode({{}, "T1", "0"}) != enc.encode({{}, "T1", "99"}));
  CHECK(enc.encode({{}, "T1", "3"}) == enc.encode({{}, "T1", "4"}));
}

TEST_CASE("synth_generate") {
  SUBCASE("single profile covers the day") {
    SynthConfig c;
    c.profiles = {{"Sleep", 86400 * 4, 1, 1, 1, {"M1"}, {"ON", "OFF"}}};
    c.regimes = {{"only", {1}}};
    const auto d = synth_generate(c);
    REQUIRE(d.truth.intervals().size() == 1);
    CHECK(d.truth.intervals()[0].label == "Sleep");
    CHECK(d.truth.duration() == std::chrono::days(1));
  }
  SUBCASE("deterministic for a seed") {
    const auto a = synth_generate(regime_shift_config());
    const auto b = synth_generate(regime_shift_config());
    std::ostringstream x, y;
    write_casas(x, a);
    write_casas(y, b);
    CHECK(x.str() == y.str());
    CHECK(a.truth == b.truth);
  }
  SUBCASE("per-day mean duration follows the schedule") {
    const auto c = regime_shift_config();
    SynthLedger ledger;
    const auto d = synth_generate(c, &ledger);
    const auto days = partition_by_day(d);
    REQUIRE(days.size() == c.n_days);
    for (std::size_t i = 0; i < days.size(); ++i) {
      double total = 0;
      std::size_t n = 0;
      for (const auto& iv : days[i].truth.intervals()) {
        total += to_seconds(iv.duration());
        ++n;
      }
      const double expected = ledger.day_regime[i] == "short" ? 40 : 1500;
      CHECK(total / n == doctest::Approx(expected).epsilon(0.2));
    }
  }
  SUBCASE("silent days have no events") {
    auto c = regime_shift_config();
    c.schedule = {"short", "silent", "long"};
    c.n_days = 30;
    const auto d = synth_generate(c);
    CHECK(partition_by_day(d).size() == 20);
  }
  SUBCASE("invalid configs") {
    auto c = regime_shift_config();
    c.profiles[0].mean_duration_seconds = 0;
    CHECK_THROWS_AS(synth_generate(c), ConfigError);
    c = regime_shift_config();
    c.schedule = {"weekend"};
    CHECK_THROWS_AS(synth_generate(c), ConfigError);
    c = regime_shift_config();
    c.regimes[0].weights = {1, 0};
    CHECK_THROWS_AS(synth_generate(c), ConfigError);
  }
}

TEST_CASE("dataset_stats") {
  SUBCASE("single interval") {
    const auto d = parse_casas("2010-11-04 00:00:01 M1 ON\n2010-11-04 00:00:05 M1 OFF\n");
    const auto s = dataset_stats(d);
    CHECK(s.labels.size() == 1);
    CHECK(s.event_count == 2);
  }
  SUBCASE("sample file counts match line counts") {
    const auto text = read_file(SEGDECOMP_SAMPLE_DIR "/sample_casas.txt");
    const auto s = dataset_stats(parse_casas(text));
    std::size_t lines = 0;
    std::map<std::string, std::size_t> per_sensor;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) {
      if (l.empty()) continue;
      ++lines;
      std::istringstream f(l);
      std::string date, time, sensor;
      f >> date >> time >> sensor;
      ++per_sensor[sensor];
    }
    CHECK(s.event_count == lines);
    CHECK(s.events_per_sensor == per_sensor);
    CHECK(s.sensor_count == per_sensor.size());
    Duration total{0};
    for (const auto& [label, ls] : s.labels) total += ls.total;
    CHECK(total == s.domain);
  }
  SUBCASE("synthetic durations match the generator bookkeeping") {
    SynthLedger ledger;
    const auto d = synth_generate(regime_shift_config(), &ledger);
    const auto s = dataset_stats(d);
    for (const auto& [label, seconds] : ledger.label_seconds)
      CHECK(to_seconds(s.labels.at(label).total) == doctest::Approx(seconds).epsilon(1e-9));
    std::ostringstream out;
    print_stats(out, s);
    CHECK(out.str().find("Quick") != std::string::npos);
  }
}
