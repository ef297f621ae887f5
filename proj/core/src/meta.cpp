#include "segdecomp/meta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <set>
#include <stdexcept>

#include "segdecomp/errors.hpp"

namespace segdecomp {

namespace {

CivilDate date_of(const LabeledDataset& day) {
  return civil_date(day.stream.empty() ? day.truth.begin() : day.stream.first_time());
}

double day_f1(const LabeledDataset& day, const DayPrediction& pred, const PipelineOptions& options) {
  return score_track(day.truth, pred.track, options.eval_slice_seconds).macro_f1;
}

// Axes used by the local search: a config's rank along each parameter within
// its family. The shift rank is taken among configs sharing the same window.
std::vector<long> grid_position(std::span<const DecomposerConfig> grid, std::size_t idx) {
  const auto& c = grid[idx];
  auto values = [&](auto getter, auto filter) {
    std::vector<double> v;
    for (const auto& g : grid)
      if (g.kind() == c.kind() && filter(g)) v.push_back(getter(g));
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  auto rank = [](const std::vector<double>& v, double x) {
    return static_cast<long>(std::lower_bound(v.begin(), v.end(), x) - v.begin());
  };
  auto all = [](const DecomposerConfig&) { return true; };
  switch (c.kind()) {
    case DecomposerKind::kTimeWindow: {
      auto w = [](const DecomposerConfig& g) { return std::get<TimeWindowParams>(g.params()).window_seconds; };
      auto s = [](const DecomposerConfig& g) { return std::get<TimeWindowParams>(g.params()).shift_seconds; };
      auto same_w = [&](const DecomposerConfig& g) { return w(g) == w(c); };
      return {rank(values(w, all), w(c)), rank(values(s, same_w), s(c))};
    }
    case DecomposerKind::kEventWindow: {
      auto w = [](const DecomposerConfig& g) {
        return static_cast<double>(std::get<EventWindowParams>(g.params()).window_events);
      };
      auto s = [](const DecomposerConfig& g) {
        return static_cast<double>(std::get<EventWindowParams>(g.params()).shift_events);
      };
      auto same_w = [&](const DecomposerConfig& g) { return w(g) == w(c); };
      return {rank(values(w, all), w(c)), rank(values(s, same_w), s(c))};
    }
    case DecomposerKind::kDynamicWindow: {
      auto q = [](const DecomposerConfig& g) { return std::get<DynamicWindowParams>(g.params()).gap_quantile; };
      auto lo = [](const DecomposerConfig& g) {
        return static_cast<double>(std::get<DynamicWindowParams>(g.params()).min_events);
      };
      auto hi = [](const DecomposerConfig& g) {
        return static_cast<double>(std::get<DynamicWindowParams>(g.params()).max_events);
      };
      return {rank(values(q, all), q(c)), rank(values(lo, all), lo(c)), rank(values(hi, all), hi(c))};
    }
  }
  return {};
}

std::vector<std::vector<std::size_t>> grid_neighbours(std::span<const DecomposerConfig> grid,
                                                      std::span<const std::size_t> anchors) {
  std::vector<std::vector<long>> pos(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) pos[i] = grid_position(grid, i);
  std::vector<std::vector<std::size_t>> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::set<std::size_t> n;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      if (j == i || grid[j].kind() != grid[i].kind()) continue;
      bool close = true;
      for (std::size_t a = 0; a < pos[i].size(); ++a) close = close && std::abs(pos[i][a] - pos[j][a]) <= 1;
      if (close) n.insert(j);
    }
    for (auto a : anchors)
      if (a != i) n.insert(a);
    out[i].assign(n.begin(), n.end());
  }
  return out;
}

struct Task {
  LabeledDataset train;
  LabeledDataset val;
  IndexedDay train_idx;
  IndexedDay val_idx;
};

// Tasks hold pointers into themselves; keep them in a stable container.
std::vector<std::unique_ptr<Task>> make_tasks(std::span<const MetaSegment> segments, const Vocabulary& vocab,
                                              double fraction) {
  std::vector<std::unique_ptr<Task>> tasks;
  tasks.reserve(segments.size());
  for (const auto& ms : segments) {
    auto [head, tail] = split_day(ms.day, fraction);
    auto t = std::make_unique<Task>(Task{std::move(head), std::move(tail), {}, {}});
    t->train_idx = index_day(t->train, vocab);
    t->val_idx = index_day(t->val, vocab);
    tasks.push_back(std::move(t));
  }
  return tasks;
}

// Score of one config on one task: train on `pool` plus the task's training
// part, predict and compose the validation part.
double task_score(const Task& task, const DecomposerConfig& config, const LabeledSegments& pool,
                  const Vocabulary& vocab, std::span<const ActivityLabel> classes, const PipelineOptions& options) {
  LabeledSegments examples = pool;
  examples.append(segment_and_label(task.train_idx, config));
  if (examples.size() == 0) throw DataError("no training segments");
  const auto model = fit_classifier(examples, vocab, classes, options);
  return day_f1(task.val, predict_day(model, task.val_idx, config, options.composer), options);
}

std::size_t most_frequent(std::span<const std::size_t> choices, std::size_t grid_size,
                          std::optional<DecomposerKind> kind, std::span<const DecomposerConfig> grid) {
  std::vector<std::size_t> freq(grid_size, 0);
  for (auto c : choices)
    if (!kind || grid[c].kind() == *kind) ++freq[c];
  return static_cast<std::size_t>(std::distance(freq.begin(), std::max_element(freq.begin(), freq.end())));
}

}  // namespace

std::vector<MetaSegment> make_meta_segments(const LabeledDataset& dataset, Duration span) {
  if (span != std::chrono::days{1}) throw ConfigError("only one-day meta-segments are supported");
  if (dataset.stream.empty()) return {};
  return make_meta_segments(partition_by_day(dataset));
}

std::vector<MetaSegment> make_meta_segments(std::span<const LabeledDataset> days) {
  std::vector<MetaSegment> out;
  out.reserve(days.size());
  for (const auto& d : days) out.push_back(MetaSegment{d, date_of(d)});
  return out;
}

std::vector<double> spline_basis(double x, double period, std::size_t n_basis, int degree) {
  if (!(period > 0) || degree < 0 || n_basis < static_cast<std::size_t>(degree) + 1)
    throw std::invalid_argument("spline basis needs period > 0 and n_basis >= degree + 1");
  const double h = period / static_cast<double>(n_basis);
  double t = std::fmod(x, period);
  if (t < 0) t += period;
  double u = t / h;
  auto j = static_cast<long>(std::floor(u));
  if (j >= static_cast<long>(n_basis)) {
    j = 0;
    u = 0;
  }
  // Uniform integer knots; local triangular evaluation of the p+1 active bases.
  const auto p = static_cast<std::size_t>(degree);
  std::vector<double> n(p + 1, 0.0), left(p + 1, 0.0), right(p + 1, 0.0);
  n[0] = 1.0;
  for (std::size_t k = 1; k <= p; ++k) {
    left[k] = u - static_cast<double>(j + 1 - static_cast<long>(k));
    right[k] = static_cast<double>(j + static_cast<long>(k)) - u;
    double saved = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
      const double temp = n[r] / (right[r + 1] + left[k - r]);
      n[r] = saved + right[r + 1] * temp;
      saved = left[k - r] * temp;
    }
    n[k] = saved;
  }
  std::vector<double> out(n_basis, 0.0);
  const auto nb = static_cast<long>(n_basis);
  for (std::size_t r = 0; r <= p; ++r) {
    const long idx = ((j - static_cast<long>(p) + static_cast<long>(r)) % nb + nb) % nb;
    out[static_cast<std::size_t>(idx)] += n[r];
  }
  return out;
}

ScalerStats fit_scaler(std::span<const MetaSegment> training) {
  std::set<std::string> names;
  for (const auto& ms : training)
    for (const auto& ev : ms.day.stream) names.insert(ev.sensor_id);
  ScalerStats s;
  s.sensors.assign(names.begin(), names.end());
  const auto n = static_cast<double>(training.size());
  std::vector<std::vector<double>> counts(training.size(), std::vector<double>(s.sensors.size(), 0.0));
  for (std::size_t d = 0; d < training.size(); ++d)
    for (const auto& ev : training[d].day.stream) {
      const auto it = std::lower_bound(s.sensors.begin(), s.sensors.end(), ev.sensor_id);
      counts[d][static_cast<std::size_t>(it - s.sensors.begin())] += 1;
    }
  s.mean.assign(s.sensors.size(), 0.0);
  s.stddev.assign(s.sensors.size(), 1.0);
  if (training.empty()) return s;
  for (std::size_t k = 0; k < s.sensors.size(); ++k) {
    double m = 0;
    for (const auto& c : counts) m += c[k];
    m /= n;
    double v = 0;
    for (const auto& c : counts) v += (c[k] - m) * (c[k] - m);
    v /= n;
    s.mean[k] = m;
    s.stddev[k] = v > 0 ? std::sqrt(v) : 1.0;
  }
  return s;
}

std::vector<double> MetaFeatures::flatten() const {
  std::vector<double> out(sensor_counts);
  out.push_back(overflow);
  out.insert(out.end(), dow_basis.begin(), dow_basis.end());
  out.insert(out.end(), month_basis.begin(), month_basis.end());
  return out;
}

MetaFeatures extract_meta_features(const MetaSegment& segment, const ScalerStats& scaler, const SplineConfig& spline,
                                   std::vector<std::string>* warnings) {
  MetaFeatures f;
  std::vector<double> counts(scaler.sensors.size(), 0.0);
  std::set<std::string> unknown;
  for (const auto& ev : segment.day.stream) {
    const auto it = std::lower_bound(scaler.sensors.begin(), scaler.sensors.end(), ev.sensor_id);
    if (it == scaler.sensors.end() || *it != ev.sensor_id) {
      f.overflow += 1;
      unknown.insert(ev.sensor_id);
      continue;
    }
    counts[static_cast<std::size_t>(it - scaler.sensors.begin())] += 1;
  }
  if (warnings)
    for (const auto& s : unknown)
      warnings->push_back(format_date(segment.date) + ": sensor '" + s + "' unknown to the scaler");
  f.sensor_counts.resize(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) f.sensor_counts[k] = (counts[k] - scaler.mean[k]) / scaler.stddev[k];
  const std::chrono::weekday wd{std::chrono::sys_days{segment.date}};
  f.dow_basis = spline_basis(static_cast<double>(wd.iso_encoding() - 1), 7.0, spline.n_basis, spline.degree);
  f.month_basis = spline_basis(static_cast<double>(static_cast<unsigned>(segment.date.month()) - 1), 12.0,
                               spline.n_basis, spline.degree);
  return f;
}

GridSearchResult grid_search(std::span<const DecomposerConfig> grid,
                             const std::function<double(const DecomposerConfig&)>& objective) {
  if (grid.empty()) throw ConfigError("decomposer grid is empty");
  GridSearchResult r;
  r.scores.resize(grid.size());
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    try {
      const double s = objective(grid[i]);
      r.scores[i] = s;
      if (!any || s > best) {
        best = s;
        r.best = i;
        any = true;
      }
    } catch (const std::exception& e) {
      r.failures.push_back(grid[i].to_string() + ": " + e.what());
    }
  }
  if (!any) {
    std::string msg = "every decomposer config failed:";
    for (const auto& f : r.failures) msg += "\n  " + f;
    throw DataError(msg);
  }
  return r;
}

DecomposerConfig grid_search_decomposer(std::span<const MetaSegment> tasks, std::span<const DecomposerConfig> grid,
                                        const PipelineOptions& options, double train_fraction) {
  if (tasks.empty()) throw DataError("grid search needs at least one task");
  std::vector<LabeledDataset> days;
  for (const auto& t : tasks) days.push_back(t.day);
  const auto vocab = build_vocabulary(streams_of(days));
  const auto classes = label_union(days);
  const auto prepared = make_tasks(tasks, vocab, train_fraction);
  auto objective = [&](const DecomposerConfig& config) {
    LabeledSegments examples;
    for (const auto& t : prepared) examples.append(segment_and_label(t->train_idx, config));
    if (examples.size() == 0) throw DataError("no training segments");
    const auto model = fit_classifier(examples, vocab, classes, options);
    double sum = 0;
    for (const auto& t : prepared) sum += day_f1(t->val, predict_day(model, t->val_idx, config, options.composer), options);
    return sum / static_cast<double>(prepared.size());
  };
  return grid[grid_search(grid, objective).best];
}

std::vector<DecomposerConfig> default_decomposer_grid() {
  std::vector<DecomposerConfig> g;
  for (double w : {30.0, 60.0, 120.0}) {
    g.push_back(DecomposerConfig::tw(w, w));
    g.push_back(DecomposerConfig::tw(w, w / 2));
  }
  for (std::size_t w : {3u, 5u, 10u, 20u, 30u}) {
    g.push_back(DecomposerConfig::ew(w, w));
    g.push_back(DecomposerConfig::ew(w, (w + 1) / 2));
  }
  for (double q : {0.90, 0.95}) g.push_back(DecomposerConfig::dw(q, 3, 30));
  return g;
}

MetaSelector MetaSelector::nearest_neighbor(std::vector<std::vector<double>> features,
                                            std::vector<std::size_t> choices, std::size_t grid_size) {
  if (features.empty() || features.size() != choices.size())
    throw std::invalid_argument("selector needs matching, non-empty training data");
  for (auto c : choices)
    if (c >= grid_size) throw std::invalid_argument("selector choice outside the grid");
  MetaSelector s;
  s.kind_ = SelectorKind::kNearestNeighbor;
  s.grid_size_ = grid_size;
  s.features_ = std::move(features);
  s.choices_ = std::move(choices);
  return s;
}

MetaSelector MetaSelector::from_mlp(Mlp mlp, std::size_t grid_size) {
  if (mlp.layers().empty() || mlp.layers().back().out != grid_size)
    throw std::invalid_argument("mlp output size does not match the grid");
  MetaSelector s;
  s.kind_ = SelectorKind::kMlp;
  s.grid_size_ = grid_size;
  s.mlp_ = std::move(mlp);
  return s;
}

MetaSelector MetaSelector::fit(SelectorKind kind, std::vector<std::vector<double>> features,
                               std::vector<std::size_t> choices, std::size_t grid_size, const MlpOptions& mlp) {
  if (kind == SelectorKind::kNearestNeighbor)
    return nearest_neighbor(std::move(features), std::move(choices), grid_size);
  if (features.empty() || features.size() != choices.size())
    throw std::invalid_argument("selector needs matching, non-empty training data");
  return from_mlp(Mlp::fit(features, choices, grid_size, mlp), grid_size);
}

std::size_t MetaSelector::predict(std::span<const double> features) const {
  if (kind_ == SelectorKind::kMlp) return mlp_.predict(features);
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].size() != features.size()) throw std::invalid_argument("meta-feature length mismatch");
    double d = 0;
    for (std::size_t k = 0; k < features.size(); ++k) d += (features_[i][k] - features[k]) * (features_[i][k] - features[k]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return choices_[best];
}

SWMetaBundle swmeta_train(std::span<const LabeledDataset> train_days, const SWMetaHyper& hyper,
                          const PipelineOptions& options) {
  if (hyper.meta_segment_span != std::chrono::days{1}) throw ConfigError("only one-day meta-segments are supported");
  if (hyper.grid.empty()) throw ConfigError("decomposer grid is empty");
  if (hyper.batch_size == 0 || hyper.outer_repetitions == 0)
    throw ConfigError("batch_size and outer_repetitions must be positive");
  if (train_days.size() < hyper.batch_size)
    throw DataError("SWMeta needs at least " + std::to_string(hyper.batch_size) + " training days, got " +
                    std::to_string(train_days.size()));
  if (options.observer)
    for (const auto& d : train_days) options.observer(d);

  const auto segments = make_meta_segments(train_days);
  const std::span<const DecomposerConfig> grid = hyper.grid;

  SWMetaBundle b;
  b.grid = hyper.grid;
  b.spline = hyper.spline;
  b.seed = hyper.seed;
  b.gamma = hyper.gamma;
  b.meta_knowledge = hyper.meta_knowledge;
  b.vocab = build_vocabulary(streams_of(train_days));
  const auto classes = label_union(train_days);

  // Phase 1: sampled tasks, per-task grid search, cumulative pool for M.
  const auto tasks = make_tasks(segments, b.vocab, hyper.task_train_fraction);
  std::map<std::size_t, LabeledSegments> pool;
  auto pooled = [&pool] {
    LabeledSegments all;
    for (const auto& [_, p] : pool) all.append(p);
    return all;
  };
  std::mt19937_64 rng(hyper.seed);
  std::vector<std::size_t> order(tasks.size());
  std::optional<ClassifierModel> m;
  for (std::size_t rep = 0; rep < hyper.outer_repetitions; ++rep) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = 0; i < hyper.batch_size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
      std::swap(order[i], order[pick(rng)]);
    }
    for (std::size_t i = 0; i < hyper.batch_size; ++i) {
      const auto& task = *tasks[order[i]];
      const auto base = pooled();
      std::size_t choice = 0;
      if (grid.size() > 1) {
        auto objective = [&](const DecomposerConfig& c) {
          return task_score(task, c, base, b.vocab, classes, options);
        };
        try {
          choice = grid_search(grid, objective).best;
        } catch (const DataError&) {
          continue;  // a task too sparse for every config teaches nothing
        }
      }
      b.trace.outer_choices.push_back(choice);
      pool[order[i]] = segment_and_label(task.val_idx, grid[choice]);
    }
    const auto all = pooled();
    if (all.size() > 0) m = fit_classifier(all, b.vocab, classes, options);
  }

  // Phase 2: per-day local search from the overall favourite with M fixed.
  b.trace.global_choice = most_frequent(b.trace.outer_choices, grid.size(), std::nullopt, grid);
  for (auto kind : {DecomposerKind::kTimeWindow, DecomposerKind::kEventWindow, DecomposerKind::kDynamicWindow}) {
    const bool present = std::any_of(b.trace.outer_choices.begin(), b.trace.outer_choices.end(),
                                     [&](std::size_t c) { return grid[c].kind() == kind; });
    if (present) b.trace.family_anchors.push_back(most_frequent(b.trace.outer_choices, grid.size(), kind, grid));
  }
  const auto neighbours = grid_neighbours(grid, b.trace.family_anchors);
  std::vector<IndexedDay> indexed;
  indexed.reserve(train_days.size());
  for (const auto& d : train_days) indexed.push_back(index_day(d, b.vocab));

  std::vector<std::size_t> day_choice(train_days.size(), b.trace.global_choice);
  if (grid.size() > 1 && m) {
    for (std::size_t d = 0; d < train_days.size(); ++d) {
      std::map<std::size_t, double> cache;
      auto score = [&](std::size_t c) {
        auto it = cache.find(c);
        if (it != cache.end()) return it->second;
        double s = -1;
        if (!train_days[d].stream.empty())
          s = day_f1(train_days[d], predict_day(*m, indexed[d], grid[c], options.composer), options);
        cache.emplace(c, s);
        return s;
      };
      std::size_t cur = b.trace.global_choice;
      double cur_s = score(cur);
      for (;;) {
        std::size_t next = cur;
        double next_s = cur_s;
        for (auto c : neighbours[cur]) {
          const double s = score(c);
          if (s > next_s) {
            next = c;
            next_s = s;
          }
        }
        if (next == cur) break;
        cur = next;
        cur_s = next_s;
      }
      day_choice[d] = cur;
    }
  }

  b.scaler = fit_scaler(segments);
  std::vector<std::vector<double>> x;
  x.reserve(segments.size());
  for (std::size_t d = 0; d < segments.size(); ++d) {
    x.push_back(extract_meta_features(segments[d], b.scaler, b.spline).flatten());
    b.trace.day_choices.emplace_back(segments[d].date, day_choice[d]);
  }
  b.selector = MetaSelector::fit(hyper.selector, std::move(x), day_choice, grid.size(), hyper.mlp);

  // Final M: every training day decomposed with its own selected config.
  LabeledSegments examples;
  for (std::size_t d = 0; d < train_days.size(); ++d)
    examples.append(segment_and_label(indexed[d], grid[day_choice[d]]));
  if (examples.size() == 0) throw DataError("SWMeta produced no training segments");
  b.model = fit_classifier(examples, b.vocab, classes, options);
  return b;
}

SWMetaBundle swmeta_train(const LabeledDataset& train, const SWMetaHyper& hyper, const PipelineOptions& options) {
  const auto days = partition_by_day(train);
  return swmeta_train(std::span<const LabeledDataset>(days), hyper, options);
}

SWMetaPrediction swmeta_predict(std::span<const LabeledDataset> test_days, const SWMetaBundle& bundle,
                                const PipelineOptions& options) {
  SWMetaPrediction out;
  std::vector<ActivityTrack> tracks;
  tracks.reserve(test_days.size());
  for (const auto& d : test_days) {
    const MetaSegment ms{d, date_of(d)};
    const auto choice = bundle.selector.predict(extract_meta_features(ms, bundle.scaler, bundle.spline).flatten());
    out.selected.emplace_back(ms.date, choice);
    tracks.push_back(predict_day(bundle.model, index_day(d, bundle.vocab), bundle.grid.at(choice), options.composer).track);
  }
  out.track = meta_compose(tracks);
  return out;
}

SWMetaPrediction swmeta_predict(const LabeledDataset& test, const SWMetaBundle& bundle,
                                const PipelineOptions& options) {
  if (test.stream.empty()) return {};
  const auto days = partition_by_day(test);
  return swmeta_predict(std::span<const LabeledDataset>(days), bundle, options);
}

MetaAdvantage check_meta_advantage(std::span<const double> meta_f1_per_fold,
                                   const std::map<std::string, std::vector<double>>& fixed_f1_per_fold) {
  if (meta_f1_per_fold.empty() || fixed_f1_per_fold.empty())
    throw std::invalid_argument("meta advantage needs meta and fixed scores");
  auto mean = [](std::span<const double> v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  MetaAdvantage r;
  r.meta_loss = 1.0 - mean(meta_f1_per_fold);
  r.best_fixed_loss = std::numeric_limits<double>::infinity();
  for (const auto& [name, scores] : fixed_f1_per_fold) {
    if (scores.size() != meta_f1_per_fold.size())
      throw std::invalid_argument("fold count of '" + name + "' differs from the meta method");
    const double loss = 1.0 - mean(scores);
    if (loss < r.best_fixed_loss) {
      r.best_fixed_loss = loss;
      r.best_fixed_method = name;
    }
  }
  r.difference = r.meta_loss - r.best_fixed_loss;
  r.advantage = -r.difference;
  r.holds = r.difference < 0;
  return r;
}

}  // namespace segdecomp
