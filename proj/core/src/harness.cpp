#include "segdecomp/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "segdecomp/errors.hpp"
#include "segdecomp/io.hpp"

namespace segdecomp {

using nlohmann::json;

namespace {

// Rethrows the active exception with `prefix` prepended, keeping its category.
[[noreturn]] void rethrow_with(const std::string& prefix) {
  try {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  } catch (const IoError& e) {
    throw IoError(prefix + e.what());
  } catch (const std::exception& e) {
    throw RunError(prefix + e.what());
  }
}

// Runs jobs on `threads` workers; each job owns its output slot, so the
// result does not depend on scheduling. The first failing job (by index) wins.
void run_jobs(std::vector<std::function<void()>>& jobs, std::size_t threads) {
  std::vector<std::exception_ptr> errors(jobs.size());
  auto run = [&](std::size_t i) {
    try {
      jobs[i]();
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (threads <= 1 || jobs.size() <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      run(i);
      if (errors[i]) std::rethrow_exception(errors[i]);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, jobs.size()); ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs.size(); i = next++) run(i);
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double mean_of(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double fold_ts_f1(const FixedPipeline& fp, std::span<const LabeledDataset> test, const PipelineOptions& options) {
  return score_track(joined_truth(test), predict_fixed(fp, test, options), options.eval_slice_seconds).macro_f1;
}

DecomposerConfig select_grid_best(const MethodSpec& method, std::span<const LabeledDataset> train,
                                  const PipelineOptions& options) {
  if (method.grid.size() == 1) return method.grid.front();
  const auto inner = temporal_kfold(train, std::min(method.inner_folds, train.size()));
  std::vector<FoldData> splits;
  for (std::size_t f = 0; f < inner.k; ++f) splits.push_back(fold_split(inner, train, f));
  auto objective = [&](const DecomposerConfig& c) {
    std::vector<double> scores;
    for (const auto& s : splits) scores.push_back(fold_ts_f1(fit_fixed(s.train, c, options), s.test, options));
    return mean_of(scores);
  };
  return method.grid[grid_search(method.grid, objective).best];
}

// Pads to `width` display columns; multi-byte UTF-8 sequences count once.
std::string display_pad(const std::string& s, std::size_t width) {
  std::size_t cols = 0;
  for (unsigned char ch : s)
    if ((ch & 0xC0) != 0x80) ++cols;
  return s + std::string(width > cols ? width - cols : 0, ' ');
}

json summary_json(const ScoreSummary& s) {
  json per = json::array();
  for (const auto& c : s.per_class)
    per.push_back({{"label", c.label},
                   {"precision", c.precision},
                   {"recall", c.recall},
                   {"f1", c.f1},
                   {"support", c.support},
                   {"predicted", c.predicted}});
  return {{"macro_f1", s.macro_f1},
          {"macro_tpr", s.macro_tpr},
          {"macro_precision", s.macro_precision},
          {"accuracy", s.accuracy},
          {"macro_f1_no_other", s.macro_f1_no_other},
          {"macro_tpr_no_other", s.macro_tpr_no_other},
          {"macro_precision_no_other", s.macro_precision_no_other},
          {"per_class", per}};
}

ScoreSummary summary_from(const json& j) {
  ScoreSummary s;
  s.macro_f1 = j.at("macro_f1").get<double>();
  s.macro_tpr = j.at("macro_tpr").get<double>();
  s.macro_precision = j.at("macro_precision").get<double>();
  s.accuracy = j.at("accuracy").get<double>();
  s.macro_f1_no_other = j.at("macro_f1_no_other").get<double>();
  s.macro_tpr_no_other = j.at("macro_tpr_no_other").get<double>();
  s.macro_precision_no_other = j.at("macro_precision_no_other").get<double>();
  for (const auto& c : j.at("per_class"))
    s.per_class.push_back(ClassScore{c.at("label").get<std::string>(), c.at("precision").get<double>(),
                                     c.at("recall").get<double>(), c.at("f1").get<double>(),
                                     c.at("support").get<std::uint64_t>(), c.at("predicted").get<std::uint64_t>()});
  return s;
}

json stat_json(const MetricStat& m) { return {{"mean", m.mean}, {"stddev", m.stddev}}; }

CivilDate date_from(const json& j) {
  const auto t = parse_timestamp(j.get<std::string>(), "00:00:00");
  if (!t) throw DataError("bad date '" + j.get<std::string>() + "'");
  return civil_date(*t);
}

MethodKind method_kind_from(const std::string& s) {
  for (auto k : {MethodKind::kFixed, MethodKind::kGridBest, MethodKind::kSWMeta})
    if (method_kind_name(k) == s) return k;
  throw DataError("unknown method kind '" + s + "'");
}

}  // namespace

FoldPlan temporal_kfold(std::span<const CivilDate> dates, std::size_t k) {
  std::set<CivilDate> unique(dates.begin(), dates.end());
  if (k == 0) throw ConfigError("k must be positive");
  if (unique.size() < k)
    throw DataError("temporal k-fold needs at least " + std::to_string(k) + " days, got " +
                    std::to_string(unique.size()));
  FoldPlan plan;
  plan.k = k;
  plan.folds.resize(k);
  const std::size_t base = unique.size() / k;
  const std::size_t extra = unique.size() % k;
  auto it = unique.begin();
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t n = base + (f < extra ? 1 : 0);
    for (std::size_t i = 0; i < n; ++i, ++it) {
      plan.folds[f].push_back(*it);
      plan.fold_of[*it] = f;
    }
  }
  return plan;
}

FoldPlan temporal_kfold(std::span<const LabeledDataset> days, std::size_t k) {
  std::vector<CivilDate> dates;
  dates.reserve(days.size());
  for (const auto& d : days) dates.push_back(civil_date(d.stream.empty() ? d.truth.begin() : d.stream.first_time()));
  return temporal_kfold(dates, k);
}

FoldData fold_split(const FoldPlan& plan, std::span<const LabeledDataset> days, std::size_t fold) {
  if (fold >= plan.k) throw std::out_of_range("fold index outside the plan");
  FoldData out;
  for (const auto& d : days) {
    const auto date = civil_date(d.stream.empty() ? d.truth.begin() : d.stream.first_time());
    const auto it = plan.fold_of.find(date);
    if (it == plan.fold_of.end()) continue;
    (it->second == fold ? out.test : out.train).push_back(d);
  }
  return out;
}

LabeledDataset load_dataset(const DatasetSource& source, std::size_t repetition, std::vector<std::string>* warnings) {
  if (source.synthetic) {
    auto cfg = *source.synthetic;
    cfg.seed += repetition;
    return synth_generate(cfg);
  }
  std::ifstream in(source.casas_path);
  if (!in) throw IoError("cannot read dataset " + source.casas_path.string());
  return parse_casas(in, warnings);
}

FoldRecord evaluate_fold(const MethodSpec& method, const FoldData& data, const PipelineOptions& options,
                         std::uint64_t seed) {
  FoldRecord rec;
  for (const auto& d : data.test) rec.test_dates.push_back(civil_date(d.stream.empty() ? d.truth.begin() : d.stream.first_time()));
  const auto truth = joined_truth(data.test);
  ActivityTrack predicted;
  switch (method.kind) {
    case MethodKind::kFixed:
    case MethodKind::kGridBest: {
      const auto config =
          method.kind == MethodKind::kFixed ? method.decomposer : select_grid_best(method, data.train, options);
      rec.config = config.to_string();
      predicted = predict_fixed(fit_fixed(data.train, config, options), data.test, options);
      break;
    }
    case MethodKind::kSWMeta: {
      auto hyper = method.hyper;
      hyper.seed = seed;
      const auto bundle = swmeta_train(data.train, hyper, options);
      auto pred = swmeta_predict(data.test, bundle, options);
      for (const auto& [date, choice] : pred.selected) rec.selected.emplace_back(date, bundle.grid[choice].to_string());
      predicted = std::move(pred.track);
      break;
    }
  }
  rec.scores = score_track(truth, predicted, options.eval_slice_seconds);
  return rec;
}

Report run_experiment(const ExperimentConfig& config, const RunHooks& hooks) {
  if (config.methods.empty()) throw ConfigError("config lists no methods");
  const auto t0 = std::chrono::steady_clock::now();
  Report report;
  report.seed = config.seed;
  report.config_hash = fnv1a_hex(config.canonical);
  report.folds = config.folds;
  report.repetitions = config.repetitions;
  report.slice_seconds = config.slice_seconds;
  for (const auto& m : config.methods) report.methods.push_back(MethodReport{m.name, m.kind, {}, {}});

  for (std::size_t r = 0; r < config.repetitions; ++r) {
    std::vector<std::string> warnings;
    const auto data = load_dataset(config.dataset, r, &warnings);
    if (hooks.log)
      for (const auto& w : warnings) hooks.log("warning: " + w);
    const auto days = partition_by_day(data);
    const auto plan = temporal_kfold(days, config.folds);
    std::vector<FoldData> splits;
    for (std::size_t f = 0; f < plan.k; ++f) splits.push_back(fold_split(plan, days, f));

    std::vector<FoldRecord> cells(plan.k * config.methods.size());
    std::vector<std::function<void()>> jobs;
    for (std::size_t f = 0; f < plan.k; ++f)
      for (std::size_t m = 0; m < config.methods.size(); ++m)
        jobs.push_back([&, r, f, m] {
          const auto& method = config.methods[m];
          try {
            auto options = config.pipeline_options();
            if (hooks.on_training)
              options.observer = [&, r, f](const LabeledDataset& d) { hooks.on_training(r, f, plan, d); };
            auto rec = evaluate_fold(method, splits[f], options, config.seed + r);
            rec.repetition = r;
            rec.fold = f;
            cells[f * config.methods.size() + m] = std::move(rec);
          } catch (...) {
            rethrow_with("repetition " + std::to_string(r) + ", fold " + std::to_string(f) + ", method '" +
                         method.name + "': ");
          }
        });
    run_jobs(jobs, config.threads);
    for (std::size_t f = 0; f < plan.k; ++f)
      for (std::size_t m = 0; m < config.methods.size(); ++m)
        report.methods[m].records.push_back(std::move(cells[f * config.methods.size() + m]));
    if (hooks.log) hooks.log("repetition " + std::to_string(r + 1) + "/" + std::to_string(config.repetitions) + " done");
  }
  recompute_aggregates(report);
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

void recompute_aggregates(Report& report) {
  for (auto& m : report.methods) {
    std::vector<ScoreSummary> s;
    for (const auto& r : m.records) s.push_back(r.scores);
    m.aggregate = s.empty() ? ExpectedPerformance{} : expected_performance(s);
  }
}

std::vector<double> fold_f1(const MethodReport& method) {
  std::vector<double> out;
  for (const auto& r : method.records) out.push_back(r.scores.macro_f1);
  return out;
}

MetaAdvantage report_meta_advantage(const Report& report, const std::string& meta_method) {
  const MethodReport* meta = nullptr;
  std::map<std::string, std::vector<double>> fixed;
  for (const auto& m : report.methods) {
    if (m.name == meta_method) {
      meta = &m;
    } else if (m.kind != MethodKind::kSWMeta) {
      fixed[m.name] = fold_f1(m);
    }
  }
  if (!meta) throw std::invalid_argument("report has no method '" + meta_method + "'");
  const auto f1 = fold_f1(*meta);
  return check_meta_advantage(f1, fixed);
}

std::vector<double> candidate_shifts(double size) {
  std::set<double> s{1.0, std::ceil(size / 4), std::ceil(size / 2), size};
  std::vector<double> out;
  for (double v : s)
    if (v >= 1 && v <= size) out.push_back(v);
  return out;
}

std::vector<DivergencePoint> run_divergence_study(const LabeledDataset& dataset, DecomposerKind family,
                                                  std::span<const double> sizes, std::size_t folds,
                                                  const PipelineOptions& options) {
  if (family == DecomposerKind::kDynamicWindow) throw ConfigError("divergence study needs the ew or tw family");
  const auto days = partition_by_day(dataset);
  const auto plan = temporal_kfold(days, folds);
  std::vector<FoldData> splits;
  for (std::size_t f = 0; f < plan.k; ++f) splits.push_back(fold_split(plan, days, f));

  std::vector<DivergencePoint> out;
  for (double size : sizes) {
    DivergencePoint p;
    p.size = size;
    p.classic_f1 = p.ts_f1 = -1;
    for (double shift : candidate_shifts(size)) {
      const auto config = family == DecomposerKind::kEventWindow
                              ? DecomposerConfig::ew(static_cast<std::size_t>(std::llround(size)),
                                                     static_cast<std::size_t>(std::llround(shift)))
                              : DecomposerConfig::tw(size, shift);
      std::vector<double> classic, ts;
      for (const auto& split : splits) {
        const auto fp = fit_fixed(split.train, config, options);
        std::vector<ActivityLabel> labels, predicted;
        std::vector<ActivityTrack> tracks;
        for (const auto& day : split.test) {
          const auto pred = predict_day(fp.model, index_day(day, fp.vocab), config, options.composer);
          for (std::size_t i = 0; i < pred.segments.size(); ++i) {
            if (pred.segments[i].empty()) continue;
            labels.push_back(assign_segment_label(pred.segments[i], day.truth));
            predicted.push_back(fp.model.classes()[pred.predictions[i].argmax()]);
          }
          tracks.push_back(pred.track);
        }
        classic.push_back(classic_confusion(labels, predicted).summary.macro_f1);
        ts.push_back(score_track(joined_truth(split.test), meta_compose(tracks), options.eval_slice_seconds).macro_f1);
      }
      const double c = mean_of(classic);
      const double t = mean_of(ts);
      if (c > p.classic_f1) {
        p.classic_f1 = c;
        p.classic_shift = shift;
      }
      if (t > p.ts_f1) {
        p.ts_f1 = t;
        p.ts_shift = shift;
      }
    }
    out.push_back(p);
  }
  return out;
}

std::string report_json(const Report& report, bool with_manifest) {
  json methods = json::array();
  for (const auto& m : report.methods) {
    json records = json::array();
    for (const auto& r : m.records) {
      json dates = json::array();
      for (const auto& d : r.test_dates) dates.push_back(format_date(d));
      json selected = json::array();
      for (const auto& [d, c] : r.selected) selected.push_back({{"date", format_date(d)}, {"config", c}});
      records.push_back({{"repetition", r.repetition},
                         {"fold", r.fold},
                         {"test_dates", dates},
                         {"config", r.config},
                         {"selected", selected},
                         {"scores", summary_json(r.scores)}});
    }
    const auto& a = m.aggregate;
    methods.push_back({{"name", m.name},
                       {"kind", method_kind_name(m.kind)},
                       {"records", records},
                       {"aggregate",
                        {{"n", a.n},
                         {"macro_f1", stat_json(a.macro_f1)},
                         {"macro_tpr", stat_json(a.macro_tpr)},
                         {"macro_precision", stat_json(a.macro_precision)},
                         {"accuracy", stat_json(a.accuracy)},
                         {"macro_f1_no_other", stat_json(a.macro_f1_no_other)},
                         {"macro_tpr_no_other", stat_json(a.macro_tpr_no_other)}}}});
  }
  json j{{"schema_version", kSchemaVersion},
         {"seed", report.seed},
         {"config_hash", report.config_hash},
         {"folds", report.folds},
         {"repetitions", report.repetitions},
         {"slice_seconds", report.slice_seconds},
         {"methods", methods}};
  if (with_manifest)
    j["manifest"] = {{"tool", "segdecomp"},
                     {"version", library_version()},
                     {"seed", report.seed},
                     {"config_hash", report.config_hash},
                     {"runtime_seconds", report.runtime_seconds}};
  return j.dump(2) + "\n";
}

Report read_report(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read report " + file.string());
  try {
    const json j = json::parse(in);
    Report r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.folds = j.at("folds").get<std::size_t>();
    r.repetitions = j.at("repetitions").get<std::size_t>();
    r.slice_seconds = j.at("slice_seconds").get<double>();
    if (j.contains("manifest")) r.runtime_seconds = j.at("manifest").at("runtime_seconds").get<double>();
    for (const auto& m : j.at("methods")) {
      MethodReport mr{m.at("name").get<std::string>(), method_kind_from(m.at("kind").get<std::string>()), {}, {}};
      for (const auto& rec : m.at("records")) {
        FoldRecord fr;
        fr.repetition = rec.at("repetition").get<std::size_t>();
        fr.fold = rec.at("fold").get<std::size_t>();
        for (const auto& d : rec.at("test_dates")) fr.test_dates.push_back(date_from(d));
        fr.config = rec.at("config").get<std::string>();
        for (const auto& s : rec.at("selected"))
          fr.selected.emplace_back(date_from(s.at("date")), s.at("config").get<std::string>());
        fr.scores = summary_from(rec.at("scores"));
        mr.records.push_back(std::move(fr));
      }
      r.methods.push_back(std::move(mr));
    }
    recompute_aggregates(r);
    return r;
  } catch (const json::exception& e) {
    throw DataError(file.string() + ": " + e.what());
  }
}

// RFC 4180 quoting; decomposer names contain commas.
static std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char ch : text) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

std::string scores_csv(const Report& report) {
  std::ostringstream out;
  out << "method,repetition,fold,test_days,macro_f1,macro_tpr,macro_precision,accuracy,macro_f1_no_other,"
         "macro_tpr_no_other\n";
  char buf[256];
  for (const auto& m : report.methods)
    for (const auto& r : m.records) {
      const auto& s = r.scores;
      std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.repetition, r.fold,
                    r.test_dates.size(), s.macro_f1, s.macro_tpr, s.macro_precision, s.accuracy, s.macro_f1_no_other,
                    s.macro_tpr_no_other);
      out << csv_field(m.name) << ',' << buf;
    }
  return out.str();
}

std::string format_table(const Report& report) {
  std::vector<std::array<std::string, 3>> rows{{"method", "TPR mean±std", "F1 mean±std"}};
  for (const auto& m : report.methods)
    rows.push_back({m.name, m.aggregate.macro_tpr.format(), m.aggregate.macro_f1.format()});
  auto cols = [](const std::string& s) {
    std::size_t n = 0;
    for (unsigned char ch : s)
      if ((ch & 0xC0) != 0x80) ++n;
    return n;
  };
  std::size_t w0 = 0, w1 = 0;
  for (const auto& r : rows) {
    w0 = std::max(w0, cols(r[0]));
    w1 = std::max(w1, cols(r[1]));
  }
  std::ostringstream out;
  for (const auto& r : rows) out << display_pad(r[0], w0) << " | " << display_pad(r[1], w1) << " | " << r[2] << '\n';
  return out.str();
}

std::string divergence_csv(std::span<const DivergencePoint> points) {
  std::ostringstream out;
  out << "size,metric,f1,best_shift\n";
  char buf[128];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%g,classic,%.6f,%g\n%g,ts_cm,%.6f,%g\n", p.size, p.classic_f1, p.classic_shift,
                  p.size, p.ts_f1, p.ts_shift);
    out << buf;
  }
  return out.str();
}

void emit_report(const Report& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / name).string());
    out << text;
    if (!out) throw IoError("failed writing " + (dir / name).string());
  };
  write("report.json", report_json(report, true));
  write("scores.json", report_json(report, false));
  write("scores.csv", scores_csv(report));
  write("table.txt", format_table(report));
}

}  // namespace segdecomp
