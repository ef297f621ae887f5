// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Pass criterion numbers as arguments to run a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "segdecomp/config.hpp"
#include "segdecomp/errors.hpp"
#include "segdecomp/harness.hpp"
#include "segdecomp/meta.hpp"

using namespace segdecomp;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (ok) return;
    if (pass) detail = what;
    pass = false;
  }
};

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const Timestamp t0 = make_timestamp(2010, 11, 4);
Timestamp sec(double s) { return t0 + seconds_to_duration(s); }

const std::vector<ActivityLabel> kSix{"A", "B", "C", "D", "E", "Other"};

oracle::Instance random_instance(std::mt19937_64& rng) {
  static const auto grid = default_decomposer_grid();
  const double span = 30 + static_cast<double>(rng() % 3600);
  const auto stream = oracle::random_stream(rng, sec(0), span, 1 + rng() % 1000);
  oracle::Instance in;
  in.classes.assign(kSix.begin(), kSix.begin() + 1 + static_cast<long>(rng() % 6));
  in.truth = oracle::random_track(rng, sec(0), sec(span), kSix, 1 + rng() % 30, rng() % 3 == 0);
  in.composer.slice_seconds = std::vector<double>{1, 0.5, 2.5, 7, 60}[rng() % 5];
  in.composer.tie_break = rng() % 2 ? TieBreak::kHigherConfidence : TieBreak::kEarlierSegment;
  in.eval_slice_seconds = std::vector<double>{1, 0.7, 3, 10}[rng() % 4];
  in.segments = decompose(stream, grid[rng() % grid.size()]);
  for (const auto& s : in.segments)
    in.predictions.push_back(s.empty() || rng() % 10 == 0 ? PredictionDistribution{}
                                                          : oracle::random_distribution(rng, in.classes.size()));
  return in;
}

ActivityTrack compose_instance(const oracle::Instance& in) {
  return compose(in.segments, in.predictions, in.classes, in.truth.begin(), in.truth.end(), in.composer);
}

Outcome oracle_equivalence() {
  Outcome o;
  std::mt19937_64 rng(20101104);
  std::size_t cells = 0;
  for (int n = 0; n < 200; ++n) {
    const auto in = random_instance(rng);
    const auto cm = ts_confusion(in.truth, compose_instance(in), in.eval_slice_seconds, kSix);
    const auto expected = oracle::brute_ts_cm(in);
    for (std::size_t i = 0; i < cm.size(); ++i)
      for (std::size_t j = 0; j < cm.size(); ++j) {
        const auto it = expected.find({cm.labels[i], cm.labels[j]});
        const std::uint64_t want = it == expected.end() ? 0 : it->second;
        o.require(cm.at(i, j) == want, "instance " + std::to_string(n) + " cell (" + cm.labels[i] + ", " +
                                           cm.labels[j] + ") differs");
        ++cells;
      }
    for (const auto& [key, count] : expected)
      o.require(std::find(cm.labels.begin(), cm.labels.end(), key.first) != cm.labels.end() &&
                    std::find(cm.labels.begin(), cm.labels.end(), key.second) != cm.labels.end(),
                "instance " + std::to_string(n) + " lacks a label");
  }
  if (o.pass) o.detail = "200 instances, " + std::to_string(cells) + " cells equal";
  return o;
}

// Midpoints of the evaluation slices of `track` that fall in [a, b).
std::uint64_t midpoints_in(const ActivityTrack& track, double slice, Timestamp a, Timestamp b) {
  const std::int64_t w = seconds_to_duration(slice).count();
  const std::int64_t begin = to_micros(track.begin()), end = to_micros(track.end());
  std::uint64_t n = 0;
  for (std::int64_t s = begin; s < end; s += w) {
    const std::int64_t e = std::min(end, s + w);
    if (2 * (e - s) < w) break;
    const std::int64_t mid = s + (e - s) / 2;
    n += to_micros(a) <= mid && mid < to_micros(b);
  }
  return n;
}

Outcome accounting_identities() {
  Outcome o;
  std::mt19937_64 rng(7);
  std::size_t checked = 0;
  auto check = [&](const ActivityTrack& truth, const ActivityTrack& pred, double slice, bool aligned) {
    const auto cm = ts_confusion(truth, pred, slice);
    const std::int64_t w = seconds_to_duration(slice).count();
    const std::int64_t span = truth.duration().count();
    const std::uint64_t slices = static_cast<std::uint64_t>(span / w) + (2 * (span % w) >= w ? 1 : 0);
    o.require(cm.total() == slices, "total count differs from the slice count");
    std::map<ActivityLabel, std::uint64_t> mids;
    std::map<ActivityLabel, int> pieces;
    for (const auto& iv : truth.intervals()) {
      mids[iv.label] += midpoints_in(truth, slice, iv.start, iv.end);
      ++pieces[iv.label];
    }
    for (const auto& [label, d] : truth.durations_by_label()) {
      const auto row = cm.row_sum(cm.index_of(label));
      const double exact = to_seconds(d) / slice;
      o.require(row == mids[label], "row " + label + " differs from its midpoint count");
      // Every interval boundary can move at most one slice.
      o.require(std::abs(static_cast<double>(row) - exact) <= pieces[label] + 1e-9, "row " + label + " off by more than one slice per interval");
      if (aligned) o.require(static_cast<double>(row) == exact, "aligned row " + label + " is not exact");
    }
    ++checked;
  };
  for (int n = 0; n < 200; ++n) {
    const auto in = random_instance(rng);
    check(in.truth, compose_instance(in), in.eval_slice_seconds, false);
  }
  for (int n = 0; n < 200; ++n) {
    const double slice = std::vector<double>{1, 2, 0.5, 3}[rng() % 4];
    const double span = slice * static_cast<double>(10 + rng() % 3000);
    const auto truth = oracle::random_track(rng, sec(0), sec(span), kSix, 1 + rng() % 40, true, slice);
    const auto pred = oracle::random_track(rng, sec(0), sec(span), kSix, 1 + rng() % 40);
    check(truth, pred, slice, true);
  }
  if (o.pass) o.detail = std::to_string(checked) + " matrices";
  return o;
}

Outcome segment_coverage() {
  Outcome o;
  std::mt19937_64 rng(3);
  const auto grid = default_decomposer_grid();
  for (int n = 0; n < 100; ++n) {
    auto stream = oracle::random_stream(rng, sec(0), 1 + static_cast<double>(rng() % 20000), 1 + rng() % 1000);
    if (n % 4 == 0) {
      // Bursts of identical timestamps.
      std::vector<SensorEvent> ev(stream.begin(), stream.end());
      for (std::size_t i = 1; i < ev.size(); i += 3) ev[i].at = ev[i - 1].at;
      stream = EventStream(std::move(ev));
    }
    for (const auto& g : grid) {
      std::vector<int> delta(stream.size() + 1, 0);
      for (const auto& s : decompose(stream, g)) {
        ++delta[s.first];
        --delta[s.last];
      }
      int depth = 0;
      for (std::size_t i = 0; i < stream.size(); ++i) {
        depth += delta[i];
        o.require(depth >= 1, "stream " + std::to_string(n) + ", " + g.to_string() + ": event " + std::to_string(i) + " uncovered");
      }
    }
  }
  if (o.pass) o.detail = "100 streams x " + std::to_string(grid.size()) + " configs";
  return o;
}

SynthConfig small_two_regime(std::uint64_t seed) {
  auto c = two_regime_preset(seed);
  c.n_days = 8;
  return c;
}

Outcome singleton_identity() {
  Outcome o;
  const auto grid = default_decomposer_grid();
  const PipelineOptions opt;
  std::mt19937_64 rng(17);
  for (std::uint64_t k = 0; k < 10; ++k) {
    auto c = small_two_regime(100 + k);
    c.noise_fraction = 0.05 * static_cast<double>(rng() % 8);
    const auto days = partition_by_day(synth_generate(c));
    const std::vector<LabeledDataset> train(days.begin(), days.begin() + 5);
    const std::vector<LabeledDataset> test(days.begin() + 5, days.end());
    const auto config = grid[rng() % grid.size()];
    SWMetaHyper h;
    h.grid = {config};
    h.batch_size = 3;
    h.outer_repetitions = 2;
    h.seed = k;
    const auto meta = swmeta_predict(test, swmeta_train(train, h, opt), opt);
    const auto fixed = predict_fixed(fit_fixed(train, config, opt), test, opt);
    o.require(meta.track == fixed, "dataset " + std::to_string(k) + " (" + config.to_string() + ") differs");
  }
  if (o.pass) o.detail = "10 datasets bit-identical";
  return o;
}

// Shared by criteria 5 and 6.
struct RegimeStudy {
  bool done = false;
  double meta_mean = 0;
  double best_fixed_mean = 0;
  double mean_advantage = 0;
  std::string global_best;
  double global_best_mean = 0;
  double match = 0;
  std::size_t test_days = 0;
  std::vector<std::string> regime_best;
  bool regimes_as_expected = true;
  double seconds = 0;
};

RegimeStudy& regime_study() {
  static RegimeStudy s;
  if (s.done) return s;
  const auto start = std::chrono::steady_clock::now();
  const auto grid = default_decomposer_grid();
  const PipelineOptions opt;
  constexpr std::size_t kSeeds = 5, kFolds = 5;
  MethodSpec meta;
  meta.kind = MethodKind::kSWMeta;
  meta.name = "swmeta";
  std::vector<double> global(grid.size(), 0);
  std::size_t matches = 0;
  for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
    SynthLedger ledger;
    const auto config = two_regime_preset(seed);
    const auto days = partition_by_day(synth_generate(config, &ledger));
    const auto plan = temporal_kfold(days, kFolds);
    auto regime_of = [&](CivilDate d) {
      return ledger.day_regime.at(static_cast<std::size_t>((std::chrono::sys_days(d) - std::chrono::sys_days(config.start_date)).count()));
    };
    std::vector<double> fixed(grid.size(), 0);
    std::map<std::string, std::vector<double>> per_regime;
    std::vector<std::pair<std::string, std::string>> selections;
    double meta_f1 = 0;
    for (std::size_t f = 0; f < kFolds; ++f) {
      const auto split = fold_split(plan, days, f);
      const auto truth = joined_truth(split.test);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const auto fp = fit_fixed(split.train, grid[g], opt);
        fixed[g] += score_track(truth, predict_fixed(fp, split.test, opt), 1).macro_f1 / kFolds;
        for (const auto& day : split.test) {
          const auto track = predict_day(fp.model, index_day(day, fp.vocab), grid[g], opt.composer).track;
          auto& v = per_regime[regime_of(civil_date(day.stream.first_time()))];
          v.resize(grid.size());
          v[g] += score_track(day.truth, track, 1).macro_f1;
        }
      }
      const auto rec = evaluate_fold(meta, split, opt, seed);
      meta_f1 += rec.scores.macro_f1 / kFolds;
      for (const auto& [date, choice] : rec.selected) selections.emplace_back(regime_of(date), choice);
    }
    std::map<std::string, std::string> best;
    for (const auto& [regime, v] : per_regime) {
      best[regime] = grid[static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin())].to_string();
      s.regime_best.push_back("seed " + std::to_string(seed) + " " + regime + ": " + best[regime]);
    }
    s.regimes_as_expected = s.regimes_as_expected && best["short"].rfind("ew:w=3,", 0) == 0 &&
                            best["long"].rfind("tw:w=120,", 0) == 0;
    for (const auto& [regime, choice] : selections) matches += best[regime] == choice;
    s.test_days += selections.size();
    const double top = *std::max_element(fixed.begin(), fixed.end());
    s.meta_mean += meta_f1 / kSeeds;
    s.best_fixed_mean += top / kSeeds;
    s.mean_advantage += (meta_f1 - top) / kSeeds;
    for (std::size_t g = 0; g < grid.size(); ++g) global[g] += fixed[g] / kSeeds;
  }
  const auto g = static_cast<std::size_t>(std::max_element(global.begin(), global.end()) - global.begin());
  s.global_best = grid[g].to_string();
  s.global_best_mean = global[g];
  s.match = static_cast<double>(matches) / static_cast<double>(s.test_days);
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  s.done = true;
  return s;
}

Outcome meta_advantage() {
  Outcome o;
  const auto& s = regime_study();
  o.require(s.regimes_as_expected, "regime-optimal configs are not EW w=3 / TW w=120");
  o.require(s.mean_advantage >= 0.02, "advantage " + fmt("%.4f", s.mean_advantage) + " < 0.02");
  // The harness budget covers criteria 5 and 6 together.
  o.require(s.seconds < 600, "study took " + fmt("%.0f s", s.seconds));
  const std::string d = "meta " + fmt("%.4f", s.meta_mean) + ", best fixed per seed " + fmt("%.4f", s.best_fixed_mean) +
                        " (overall best " + s.global_best + " " + fmt("%.4f", s.global_best_mean) + "), advantage " +
                        fmt("%.4f", s.mean_advantage);
  o.detail = o.pass ? d : o.detail + "; " + d;
  return o;
}

Outcome selector_fidelity() {
  Outcome o;
  const auto& s = regime_study();
  o.require(s.match >= 0.8, "match " + fmt("%.3f", s.match) + " < 0.8");
  std::string d = std::to_string(static_cast<int>(std::lround(s.match * static_cast<double>(s.test_days)))) + "/" +
                  std::to_string(s.test_days) + " test days match their regime's best";
  if (!s.regime_best.empty()) d += " (" + s.regime_best[0] + ", " + s.regime_best[1] + ")";
  o.detail = o.pass ? d : o.detail + "; " + d;
  return o;
}

Outcome divergence() {
  Outcome o;
  const auto data = synth_generate(many_short_preset(1));
  const std::vector<double> sizes{5, 15, 40};
  const auto p = run_divergence_study(data, DecomposerKind::kEventWindow, sizes, 5, {});
  std::string d;
  for (std::size_t i = 0; i < p.size(); ++i) {
    d += (i ? ", " : "") + fmt("w=%g", p[i].size) + fmt(" classic %.3f", p[i].classic_f1) + fmt(" ts %.3f", p[i].ts_f1);
    if (i == 0) continue;
    o.require(p[i].classic_f1 >= p[i - 1].classic_f1 - 0.005, "classic F1 drops at " + fmt("w=%g", p[i].size));
    o.require(p[i].ts_f1 < p[i - 1].ts_f1 + 0.005 && p[i].ts_f1 < p[i - 1].ts_f1,
              "time-slice F1 does not drop at " + fmt("w=%g", p[i].size));
  }
  o.detail = o.pass ? d : o.detail + "; " + d;
  return o;
}

Outcome spline_oracle() {
  Outcome o;
  double worst = 0, worst_sum = 0;
  for (const auto& [period, n] : std::vector<std::pair<double, int>>{{7, 6}, {12, 6}, {7, 4}, {24, 12}}) {
    for (int k = 0; k < 1000; ++k) {
      const double x = period * k / 1000.0;
      const auto got = spline_basis(x, period, static_cast<std::size_t>(n), 3);
      const auto want = oracle::periodic_basis(x, period, n, 3);
      double sum = 0;
      for (int i = 0; i < n; ++i) {
        worst = std::max(worst, std::abs(got[static_cast<std::size_t>(i)] - want[static_cast<std::size_t>(i)]));
        sum += got[static_cast<std::size_t>(i)];
        o.require(got[static_cast<std::size_t>(i)] >= 0, "negative basis value");
      }
      worst_sum = std::max(worst_sum, std::abs(sum - 1));
    }
  }
  o.require(worst <= 1e-9, "max deviation " + fmt("%.3g", worst));
  o.require(worst_sum <= 1e-12, "partition of unity off by " + fmt("%.3g", worst_sum));
  if (o.pass) o.detail = "max deviation " + fmt("%.2g", worst) + ", max |sum - 1| " + fmt("%.2g", worst_sum);
  return o;
}

FeatureVector bag(std::vector<TokenCount> c) { return FeatureVector{std::move(c), 0}; }

Outcome naive_bayes() {
  Outcome o;
  // A: {t1, t1, t2}, {t1}; B: {t2, t3}; alpha 1, three tokens.
  const std::vector<FeatureVector> x{bag({{1, 2}, {2, 1}}), bag({{1, 1}}), bag({{2, 1}, {3, 1}})};
  const std::vector<ActivityLabel> y{"A", "A", "B"};
  TrainOptions opt;
  opt.vocab_size = 3;
  const auto m = train(x, y, opt);
  struct Case {
    FeatureVector f;
    double p_a;
  };
  // Priors 3/5, 2/5; P(t|A) = (4, 2, 1)/7, P(t|B) = (1, 2, 2)/5.
  const std::vector<Case> cases{{bag({{1, 1}, {3, 1}}), 75.0 / 124},
                                {bag({{2, 2}}), 75.0 / 173},
                                {bag({{1, 1}}), (3.0 / 5 * 4 / 7) / (3.0 / 5 * 4 / 7 + 2.0 / 5 * 1 / 5)},
                                {FeatureVector{{}, 2}, 0.6}};
  double worst = 0;
  for (const auto& c : cases) {
    const auto p = m.predict(c.f);
    worst = std::max({worst, std::abs(p.probabilities[0] - c.p_a), std::abs(p.probabilities[1] - (1 - c.p_a))});
  }
  o.require(m.classes() == std::vector<ActivityLabel>{"A", "B"}, "classes");
  o.require(worst <= 1e-12, "posterior off by " + fmt("%.3g", worst));
  if (o.pass) o.detail = "4 posteriors within " + fmt("%.1g", worst);
  return o;
}

Outcome fold_hygiene() {
  Outcome o;
  auto c = two_regime_preset(9);
  c.n_days = 27;
  ExperimentConfig cfg;
  cfg.dataset.synthetic = c;
  cfg.repetitions = 1;
  cfg.folds = 5;
  MethodSpec fixed;
  fixed.name = "ew";
  fixed.decomposer = DecomposerConfig::ew(10, 5);
  MethodSpec grid;
  grid.name = "grid";
  grid.kind = MethodKind::kGridBest;
  grid.grid = {DecomposerConfig::ew(3, 2), DecomposerConfig::tw(120, 60)};
  MethodSpec meta;
  meta.name = "meta";
  meta.kind = MethodKind::kSWMeta;
  meta.hyper.grid = grid.grid;
  meta.hyper.outer_repetitions = 2;
  cfg.methods = {fixed, grid, meta};

  std::size_t calls = 0, leaked = 0, training_events = 0;
  const FoldPlan* seen_plan = nullptr;
  FoldPlan plan_copy;
  RunHooks hooks;
  hooks.on_training = [&](std::size_t, std::size_t fold, const FoldPlan& plan, const LabeledDataset& training) {
    if (!seen_plan) {
      plan_copy = plan;
      seen_plan = &plan_copy;
    }
    ++calls;
    for (const auto& e : training.stream) {
      ++training_events;
      leaked += plan.fold_of.at(civil_date(e.at)) == fold;
    }
  };
  const auto report = run_experiment(cfg, hooks);
  o.require(seen_plan != nullptr, "no training call observed");
  if (!seen_plan) return o;

  std::map<CivilDate, int> appearances;
  for (const auto& f : plan_copy.folds)
    for (const auto& d : f) ++appearances[d];
  o.require(appearances.size() == 27, "plan covers " + std::to_string(appearances.size()) + " days");
  for (const auto& [d, n] : appearances) o.require(n == 1, format_date(d) + " appears " + std::to_string(n) + " times");
  // Contiguous: concatenating the folds gives the dates in calendar order.
  std::vector<CivilDate> concat;
  for (const auto& f : plan_copy.folds) concat.insert(concat.end(), f.begin(), f.end());
  std::vector<CivilDate> sorted = concat;
  std::sort(sorted.begin(), sorted.end());
  o.require(concat == sorted, "folds are not contiguous");
  for (const auto& m : report.methods) o.require(m.records.size() == 5, m.name + " has the wrong record count");
  o.require(leaked == 0, std::to_string(leaked) + " test-day events reached training");
  if (o.pass)
    o.detail = "27 days in 5 contiguous folds; " + std::to_string(calls) + " training calls, " +
               std::to_string(training_events) + " events, 0 from test days";
  return o;
}

Outcome reproducibility() {
  Outcome o;
  const char* text = R"({
    "schema_version": 1, "seed": 11, "repetitions": 2, "folds": 3,
    "dataset": {"synthetic": {"preset": "two_regime", "seed": 4, "n_days": 10}},
    "methods": [
      {"type": "fixed", "decomposer": "ew:w=3,s=2"},
      {"type": "swmeta", "batch_size": 4, "outer_repetitions": 3},
      {"type": "swmeta", "name": "swmeta_mlp", "selector": "mlp", "batch_size": 4, "outer_repetitions": 2}
    ]})";
  const auto first = report_json(run_experiment(parse_experiment_config(text)), false);
  auto cfg = parse_experiment_config(text);
  cfg.threads = 2;
  const auto second = report_json(run_experiment(cfg), false);
  o.require(first == second, "score records differ between runs");
  if (o.pass) o.detail = std::to_string(first.size()) + " bytes identical across two runs";
  return o;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome casas_parser() {
  Outcome o;
  const auto text = read_file(SEGDECOMP_SAMPLE_DIR "/sample_casas.txt");
  const auto d = parse_casas(text);
  auto ts = [](unsigned h, unsigned m, unsigned s, unsigned us) { return make_timestamp(2010, 11, 4, h, m, s, us); };
  o.require(d.stream.size() == 20, "event count " + std::to_string(d.stream.size()));
  if (d.stream.size() == 20) {
    o.require(d.stream[0] == SensorEvent{ts(0, 3, 50, 209589), "M003", "ON"}, "event 1");
    o.require(d.stream[2] == SensorEvent{ts(0, 15, 8, 984841), "T002", "21.5"}, "event 3");
    o.require(d.stream[5] == SensorEvent{ts(1, 35, 20, 72100), "M002", "ON"}, "event 6");
    o.require(d.stream[13] == SensorEvent{ts(5, 44, 1, 0), "D002", "OPEN"}, "event 14");
    o.require(d.stream[17] == SensorEvent{ts(8, 11, 9, 17000), "D004", "CLOSE"}, "event 18");
    o.require(d.stream[19] == SensorEvent{ts(8, 30, 9, 100000), "M011", "OFF"}, "event 20");
  }
  const std::vector<ActivityInterval> want{
      {"Sleeping", ts(0, 3, 50, 209589), ts(5, 40, 43, 642664)},
      {"Other", ts(5, 40, 43, 642664), ts(5, 40, 51, 303739)},
      {"Bed to Toilet", ts(5, 40, 51, 303739), ts(5, 43, 30, 279021)},
      {"Other", ts(5, 43, 30, 279021), ts(8, 1, 12, 235919)},
      {"Meal_Preparation", ts(8, 1, 12, 235919), ts(8, 30, 9, 100000)},
      {"Other", ts(8, 30, 9, 100000), ts(8, 30, 9, 100001)},
  };
  const auto got = d.truth.intervals();
  o.require(std::vector<ActivityInterval>(got.begin(), got.end()) == want, "intervals differ");
  o.require(d.label_set == std::vector<ActivityLabel>{"Bed to Toilet", "Meal_Preparation", "Other", "Sleeping"},
            "label set differs");

  const auto cut = text.substr(0, text.rfind('\n', text.size() - 2) + 1);
  try {
    parse_casas(cut);
    o.require(false, "unterminated begin was accepted");
  } catch (const AnnotationError& e) {
    o.require(e.label() == "Meal_Preparation" && e.line() == 15,
              "unterminated begin reported as '" + e.label() + "' at line " + std::to_string(e.line()));
  }
  if (o.pass) o.detail = "20 events, 6 intervals, unterminated 'Meal_Preparation' at line 15";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "compose + TS-CM equal the brute-force simulator", 60, oracle_equivalence},
      {2, "TS-CM accounting identities", 60, accounting_identities},
      {3, "default grid covers every event", 60, segment_coverage},
      {4, "singleton-grid SWMeta equals FIXED", 300, singleton_identity},
      {5, "meta advantage on two-regime data", 600, meta_advantage},
      {6, "selector fidelity", 600, selector_fidelity},
      {7, "window-size divergence", 300, divergence},
      {8, "spline oracle", 1, spline_oracle},
      {9, "naive Bayes closed form", 1, naive_bayes},
      {10, "fold hygiene", 300, fold_hygiene},
      {11, "reproducible score records", 300, reproducibility},
      {12, "CASAS sample parser", 1, casas_parser},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double took = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    // Criterion 6 reuses the study of criterion 5.
    if (c.id != 6 && took >= c.budget_seconds) {
      o.pass = false;
      o.detail += "; over the " + fmt("%.0f s", c.budget_seconds) + " budget";
    }
    std::printf("%s %2d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), took);
    std::fflush(stdout);
    failures += !o.pass;
  }
  std::printf("%d of %zu criteria failed\n", failures, wanted.empty() ? all.size() : wanted.size());
  return failures == 0 ? 0 : 1;
}
