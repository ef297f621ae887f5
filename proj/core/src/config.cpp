#include "segdecomp/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "segdecomp/errors.hpp"

namespace segdecomp {

using nlohmann::json;

namespace {

// Typed access that names the key in every error and rejects unknown keys.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(where(key) + ": missing");
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key) {
    const json& v = raw(key);
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + ": wrong type");
    }
  }

  template <class T>
  T get_or(const std::string& key, T fallback) {
    if (!j_.contains(key)) return fallback;
    return get<T>(key);
  }

  std::size_t count(const std::string& key, std::size_t fallback, std::size_t min = 1) {
    if (!j_.contains(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min))
      throw ConfigError(where(key) + ": expected an integer >= " + std::to_string(min));
    return v.get<std::size_t>();
  }

  double positive(const std::string& key, double fallback) {
    const double v = get_or<double>(key, fallback);
    if (!(v > 0)) throw ConfigError(where(key) + ": must be positive");
    return v;
  }

  Reader child(const std::string& key) { return Reader(raw(key), where(key)); }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [k, _] : j_.items())
      if (!seen_.count(k)) throw ConfigError(where(k) + ": unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

DecomposerConfig parse_decomposer(const json& v, const std::string& where) {
  if (!v.is_string()) throw ConfigError(where + ": expected a decomposer string such as \"ew:w=5,s=2\"");
  try {
    return DecomposerConfig::parse(v.get<std::string>());
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

std::vector<DecomposerConfig> parse_grid(Reader& r, const std::string& key) {
  if (!r.has(key)) return default_decomposer_grid();
  const json& v = r.raw(key);
  if (v.is_string() && v.get<std::string>() == "default") return default_decomposer_grid();
  if (!v.is_array() || v.empty()) throw ConfigError(r.where(key) + ": expected \"default\" or a non-empty list");
  std::vector<DecomposerConfig> grid;
  for (std::size_t i = 0; i < v.size(); ++i)
    grid.push_back(parse_decomposer(v[i], r.where(key) + "[" + std::to_string(i) + "]"));
  return grid;
}

CivilDate parse_date(const std::string& text, const std::string& where) {
  const auto t = parse_timestamp(text, "00:00:00");
  if (!t) throw ConfigError(where + ": expected YYYY-MM-DD");
  return civil_date(*t);
}

SynthConfig parse_synth(Reader r) {
  SynthConfig c;
  if (r.has("preset")) {
    const auto name = r.get<std::string>("preset");
    const auto seed = r.get_or<std::uint64_t>("seed", 1);
    if (name == "two_regime") {
      c = two_regime_preset(seed);
    } else if (name == "many_short") {
      c = many_short_preset(seed);
    } else {
      throw ConfigError(r.where("preset") + ": unknown preset '" + name + "'");
    }
    c.n_days = r.count("n_days", c.n_days);
    r.finish();
    return c;
  }
  if (r.has("start_date")) c.start_date = parse_date(r.get<std::string>("start_date"), r.where("start_date"));
  c.n_days = r.count("n_days", 1);
  c.seed = r.get_or<std::uint64_t>("seed", 1);
  c.noise_fraction = r.get_or<double>("noise_fraction", 0.0);
  c.noise_sensors = r.get_or<std::vector<std::string>>("noise_sensors", {});
  c.schedule = r.get_or<std::vector<std::string>>("schedule", {});
  const json& profiles = r.raw("profiles");
  if (!profiles.is_array()) throw ConfigError(r.where("profiles") + ": expected a list");
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    Reader p(profiles[i], r.where("profiles") + "[" + std::to_string(i) + "]");
    ActivityProfile a;
    a.label = p.get<std::string>("label");
    a.mean_duration_seconds = p.positive("mean_duration_seconds", a.mean_duration_seconds);
    a.events_per_minute = p.positive("events_per_minute", a.events_per_minute);
    a.sensors = p.get<std::vector<std::string>>("sensors");
    a.values = p.get_or("values", a.values);
    a.noise_burst_events = p.count("noise_burst_events", a.noise_burst_events);
    a.noise_burst_spacing_seconds = p.positive("noise_burst_spacing_seconds", a.noise_burst_spacing_seconds);
    p.finish();
    c.profiles.push_back(std::move(a));
  }
  const json& regimes = r.raw("regimes");
  if (!regimes.is_array()) throw ConfigError(r.where("regimes") + ": expected a list");
  for (std::size_t i = 0; i < regimes.size(); ++i) {
    Reader g(regimes[i], r.where("regimes") + "[" + std::to_string(i) + "]");
    c.regimes.push_back(Regime{g.get<std::string>("name"), g.get<std::vector<double>>("weights")});
    g.finish();
  }
  r.finish();
  validate(c);
  return c;
}

SWMetaHyper parse_hyper(Reader& r) {
  SWMetaHyper h;
  h.batch_size = r.count("batch_size", h.batch_size);
  h.outer_repetitions = r.count("outer_repetitions", h.outer_repetitions);
  h.grid = parse_grid(r, "grid");
  const auto selector = r.get_or<std::string>("selector", "nearest_neighbor");
  if (selector == "nearest_neighbor") {
    h.selector = SelectorKind::kNearestNeighbor;
  } else if (selector == "mlp") {
    h.selector = SelectorKind::kMlp;
  } else {
    throw ConfigError(r.where("selector") + ": expected nearest_neighbor or mlp");
  }
  h.task_train_fraction = r.get_or<double>("task_train_fraction", h.task_train_fraction);
  if (!(h.task_train_fraction > 0 && h.task_train_fraction < 1))
    throw ConfigError(r.where("task_train_fraction") + ": must lie in (0, 1)");
  if (r.has("meta_segment_days") && r.get<int>("meta_segment_days") != 1)
    throw ConfigError(r.where("meta_segment_days") + ": only one-day meta-segments are supported");
  if (r.has("spline")) {
    Reader s = r.child("spline");
    h.spline.degree = static_cast<int>(s.count("degree", static_cast<std::size_t>(h.spline.degree), 0));
    h.spline.n_basis = s.count("n_basis", h.spline.n_basis);
    s.finish();
    if (h.spline.n_basis < static_cast<std::size_t>(h.spline.degree) + 1)
      throw ConfigError(r.where("spline") + ": n_basis must be at least degree + 1");
  }
  if (r.has("mlp")) {
    Reader m = r.child("mlp");
    h.mlp.hidden_units = m.count("hidden_units", h.mlp.hidden_units);
    h.mlp.hidden_layers = m.count("hidden_layers", h.mlp.hidden_layers, 0);
    h.mlp.epochs = m.count("epochs", h.mlp.epochs);
    h.mlp.learning_rate = m.positive("learning_rate", h.mlp.learning_rate);
    h.mlp.seed = m.get_or<std::uint64_t>("seed", h.mlp.seed);
    m.finish();
  }
  h.gamma = r.get_or<std::string>("gamma", "");
  h.meta_knowledge = r.get_or<std::map<std::string, std::string>>("meta_knowledge", {});
  return h;
}

MethodSpec parse_method(Reader r) {
  MethodSpec m;
  const auto type = r.get<std::string>("type");
  if (type == "fixed") {
    m.kind = MethodKind::kFixed;
    m.decomposer = parse_decomposer(r.raw("decomposer"), r.where("decomposer"));
    m.name = r.get_or<std::string>("name", m.decomposer.to_string());
  } else if (type == "grid_best") {
    m.kind = MethodKind::kGridBest;
    m.grid = parse_grid(r, "grid");
    m.inner_folds = r.count("inner_folds", m.inner_folds, 2);
    m.name = r.get_or<std::string>("name", "grid_best");
  } else if (type == "swmeta") {
    m.kind = MethodKind::kSWMeta;
    m.hyper = parse_hyper(r);
    m.name = r.get_or<std::string>("name", "SWMeta");
  } else {
    throw ConfigError(r.where("type") + ": expected fixed, grid_best or swmeta");
  }
  r.finish();
  return m;
}

}  // namespace

std::string_view method_kind_name(MethodKind kind) {
  switch (kind) {
    case MethodKind::kFixed:
      return "fixed";
    case MethodKind::kGridBest:
      return "grid_best";
    case MethodKind::kSWMeta:
      return "swmeta";
  }
  return "?";
}

PipelineOptions ExperimentConfig::pipeline_options() const {
  PipelineOptions o;
  o.learner = learner;
  o.alpha = alpha;
  o.composer = composer;
  o.eval_slice_seconds = slice_seconds;
  return o;
}

ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Reader r(root, "");
  ExperimentConfig c;
  c.schema_version = r.get<int>("schema_version");
  if (c.schema_version != kSchemaVersion)
    throw ConfigError("schema_version " + std::to_string(c.schema_version) + " is not supported (expected " +
                      std::to_string(kSchemaVersion) + ")");
  c.seed = r.get_or<std::uint64_t>("seed", c.seed);
  c.repetitions = r.count("repetitions", c.repetitions);
  c.folds = r.count("folds", c.folds, 2);
  c.slice_seconds = r.positive("slice_seconds", c.slice_seconds);
  c.threads = r.count("threads", c.threads);

  {
    Reader d = r.child("dataset");
    if (d.has("casas") == d.has("synthetic")) throw ConfigError("dataset: give exactly one of casas or synthetic");
    if (d.has("casas")) {
      std::filesystem::path p = d.get<std::string>("casas");
      c.dataset.casas_path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    } else {
      c.dataset.synthetic = parse_synth(d.child("synthetic"));
    }
    d.finish();
  }

  if (r.has("pipeline")) {
    Reader p = r.child("pipeline");
    const auto learner = p.get_or<std::string>("learner", "naive_bayes");
    if (learner == "naive_bayes") {
      c.learner = ClassifierKind::kNaiveBayes;
    } else if (learner == "majority") {
      c.learner = ClassifierKind::kMajority;
    } else {
      throw ConfigError("pipeline.learner: expected naive_bayes or majority");
    }
    c.alpha = p.positive("alpha", c.alpha);
    c.composer.slice_seconds = p.positive("compose_slice_seconds", c.composer.slice_seconds);
    const auto tie = p.get_or<std::string>("tie_break", "earlier_segment");
    if (tie == "earlier_segment") {
      c.composer.tie_break = TieBreak::kEarlierSegment;
    } else if (tie == "higher_confidence") {
      c.composer.tie_break = TieBreak::kHigherConfidence;
    } else {
      throw ConfigError("pipeline.tie_break: expected earlier_segment or higher_confidence");
    }
    p.finish();
  }

  if (r.has("methods")) {
    const json& methods = r.raw("methods");
    if (!methods.is_array()) throw ConfigError("methods: expected a list");
    std::set<std::string> names;
    for (std::size_t i = 0; i < methods.size(); ++i) {
      c.methods.push_back(parse_method(Reader(methods[i], "methods[" + std::to_string(i) + "]")));
      if (!names.insert(c.methods.back().name).second)
        throw ConfigError("methods[" + std::to_string(i) + "]: duplicate name '" + c.methods.back().name + "'");
    }
  }

  if (r.has("divergence")) {
    Reader d = r.child("divergence");
    const auto family = d.get_or<std::string>("family", "ew");
    if (family == "ew") {
      c.divergence.family = DecomposerKind::kEventWindow;
    } else if (family == "tw") {
      c.divergence.family = DecomposerKind::kTimeWindow;
    } else {
      throw ConfigError("divergence.family: expected ew or tw");
    }
    c.divergence.sizes = d.get_or<std::vector<double>>("sizes", c.divergence.sizes);
    if (c.divergence.sizes.empty()) throw ConfigError("divergence.sizes: must not be empty");
    for (double s : c.divergence.sizes)
      if (!(s > 0)) throw ConfigError("divergence.sizes: sizes must be positive");
    d.finish();
  }
  r.finish();
  c.canonical = root.dump();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read config " + file.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_experiment_config(text.str(), file.parent_path());
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SynthConfig two_regime_preset(std::uint64_t seed) {
  SynthConfig c;
  c.n_days = 20;
  c.seed = seed;
  c.noise_fraction = 0.2;
  c.noise_sensors = {"N001", "N002", "N003", "N004"};
  const char* quick[] = {"Grab_Keys", "Wash_Hands", "Take_Pills", "Feed_Cat"};
  const char* slow[] = {"Sleep", "Watch_TV", "Cook_Dinner", "Read"};
  for (int i = 0; i < 4; ++i) {
    ActivityProfile p;
    p.label = quick[i];
    p.mean_duration_seconds = 45;
    p.events_per_minute = 2.5;
    p.sensors = {"Q" + std::to_string(i) + "a", "Q" + std::to_string(i) + "b"};
    c.profiles.push_back(p);
  }
  for (int i = 0; i < 4; ++i) {
    ActivityProfile p;
    p.label = slow[i];
    p.mean_duration_seconds = 1800;
    p.events_per_minute = 1.8;
    p.noise_burst_events = 8;
    p.noise_burst_spacing_seconds = 5;
    p.sensors = {"L" + std::to_string(i) + "a", "L" + std::to_string(i) + "b", "L" + std::to_string(i) + "c"};
    c.profiles.push_back(p);
  }
  c.regimes = {{"short", {1, 1, 1, 1, 0, 0, 0, 0}}, {"long", {0, 0, 0, 0, 1, 1, 1, 1}}};
  c.schedule = {"short", "short", "long", "long", "short", "long", "long", "short", "long", "short"};
  return c;
}

SynthConfig many_short_preset(std::uint64_t seed) {
  SynthConfig c;
  c.n_days = 10;
  c.seed = seed;
  c.noise_fraction = 0.5;
  c.noise_sensors = {"N001", "N002", "N003"};
  // Four long activities that share two sensors, and six brief ones with
  // their own sensors, drawn less often.
  const char* slow[] = {"Sleep", "Watch_TV", "Cook", "Work"};
  const char* brief[] = {"Take_Pills", "Grab_Keys", "Wash_Hands", "Feed_Cat", "Answer_Door", "Water_Plants"};
  std::vector<double> weights;
  for (int i = 0; i < 4; ++i) {
    ActivityProfile p;
    p.label = slow[i];
    p.mean_duration_seconds = 900;
    p.events_per_minute = 4;
    p.sensors = {"L" + std::to_string(i), "X001", "X002"};
    c.profiles.push_back(p);
    weights.push_back(1.0);
  }
  for (int i = 0; i < 6; ++i) {
    ActivityProfile p;
    p.label = brief[i];
    p.mean_duration_seconds = 20;
    p.events_per_minute = 6;
    p.sensors = {"S" + std::to_string(i) + "a", "S" + std::to_string(i) + "b"};
    c.profiles.push_back(p);
    weights.push_back(0.3);
  }
  c.regimes = {{"daily", weights}};
  return c;
}

}  // namespace segdecomp
