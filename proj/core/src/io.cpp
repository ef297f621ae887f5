#include "segdecomp/io.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "segdecomp/errors.hpp"

#ifndef SEGDECOMP_VERSION
#define SEGDECOMP_VERSION "0.0.0"
#endif

namespace segdecomp {

using nlohmann::json;

namespace {

void write_json(const std::filesystem::path& file, const json& j) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + file.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + file.string());
}

json read_json(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read " + file.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(file.string() + ": " + e.what());
  }
}

// Malformed stored content surfaces as DataError naming the file.
template <class F>
auto decode(const std::filesystem::path& file, F&& f) {
  const json j = read_json(file);
  try {
    return f(j);
  } catch (const json::exception& e) {
    throw DataError(file.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(file.string() + ": " + e.what());
  }
}

std::string kind_text(ClassifierKind k) { return k == ClassifierKind::kNaiveBayes ? "naive_bayes" : "majority"; }

ClassifierKind kind_from(const std::string& s) {
  if (s == "naive_bayes") return ClassifierKind::kNaiveBayes;
  if (s == "majority") return ClassifierKind::kMajority;
  throw DataError("unknown classifier kind '" + s + "'");
}

json model_json(const ClassifierModel& m) {
  return {{"kind", kind_text(m.kind())},
          {"alpha", m.alpha()},
          {"vocab_size", m.vocab_size()},
          {"classes", m.classes()},
          {"log_priors", m.log_priors()},
          {"log_likelihoods", m.log_likelihoods()},
          {"majority", m.majority_class()}};
}

ClassifierModel model_from(const json& j) {
  return ClassifierModel::from_parts(kind_from(j.at("kind").get<std::string>()), j.at("alpha").get<double>(),
                                     j.at("vocab_size").get<std::size_t>(),
                                     j.at("classes").get<std::vector<ActivityLabel>>(),
                                     j.at("log_priors").get<std::vector<double>>(),
                                     j.at("log_likelihoods").get<std::vector<double>>(),
                                     j.at("majority").get<std::size_t>());
}

json vocab_json(const Vocabulary& v) { return json(std::vector<std::string>(v.tokens().begin(), v.tokens().end())); }

Vocabulary vocab_from(const json& j) { return Vocabulary(j.get<std::vector<std::string>>()); }

json grid_json(std::span<const DecomposerConfig> grid) {
  json a = json::array();
  for (const auto& g : grid) a.push_back(g.to_string());
  return a;
}

std::vector<DecomposerConfig> grid_from(const json& j) {
  std::vector<DecomposerConfig> g;
  for (const auto& s : j) g.push_back(DecomposerConfig::parse(s.get<std::string>()));
  return g;
}

json mlp_json(const Mlp& m) {
  json layers = json::array();
  for (const auto& l : m.layers())
    layers.push_back({{"in", l.in},
                      {"out", l.out},
                      {"weight", l.weight},
                      {"bias", l.bias},
                      {"gamma", l.gamma},
                      {"beta", l.beta},
                      {"mean", l.mean},
                      {"var", l.var}});
  return {{"bn_epsilon", m.bn_epsilon()}, {"layers", layers}};
}

Mlp mlp_from(const json& j) {
  std::vector<Mlp::Layer> layers;
  for (const auto& l : j.at("layers")) {
    Mlp::Layer x;
    x.in = l.at("in").get<std::size_t>();
    x.out = l.at("out").get<std::size_t>();
    x.weight = l.at("weight").get<std::vector<double>>();
    x.bias = l.at("bias").get<std::vector<double>>();
    x.gamma = l.at("gamma").get<std::vector<double>>();
    x.beta = l.at("beta").get<std::vector<double>>();
    x.mean = l.at("mean").get<std::vector<double>>();
    x.var = l.at("var").get<std::vector<double>>();
    layers.push_back(std::move(x));
  }
  return Mlp::from_layers(std::move(layers), j.at("bn_epsilon").get<double>());
}

json day_choices_json(const std::vector<std::pair<CivilDate, std::size_t>>& v) {
  json a = json::array();
  for (const auto& [d, c] : v) a.push_back({{"date", format_date(d)}, {"choice", c}});
  return a;
}

std::vector<std::pair<CivilDate, std::size_t>> day_choices_from(const json& j) {
  std::vector<std::pair<CivilDate, std::size_t>> out;
  for (const auto& e : j) {
    const auto t = parse_timestamp(e.at("date").get<std::string>(), "00:00:00");
    if (!t) throw DataError("bad date in bundle trace");
    out.emplace_back(civil_date(*t), e.at("choice").get<std::size_t>());
  }
  return out;
}

}  // namespace

std::string_view library_version() { return SEGDECOMP_VERSION; }

void save_fixed_pipeline(const FixedPipeline& p, const std::filesystem::path& file) {
  write_json(file, {{"format", "segdecomp-fixed"},
                    {"version", library_version()},
                    {"decomposer", p.config.to_string()},
                    {"vocabulary", vocab_json(p.vocab)},
                    {"model", model_json(p.model)}});
}

FixedPipeline load_fixed_pipeline(const std::filesystem::path& file) {
  return decode(file, [](const json& j) {
    if (j.at("format") != "segdecomp-fixed") throw DataError("not a fixed-pipeline file");
    return FixedPipeline{DecomposerConfig::parse(j.at("decomposer").get<std::string>()), vocab_from(j.at("vocabulary")),
                         model_from(j.at("model"))};
  });
}

void save_bundle(const SWMetaBundle& b, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_json(dir / "vocabulary.json", vocab_json(b.vocab));
  write_json(dir / "model.json", model_json(b.model));
  write_json(dir / "scaler.json", {{"sensors", b.scaler.sensors}, {"mean", b.scaler.mean}, {"stddev", b.scaler.stddev}});
  json selector{{"kind", b.selector.kind() == SelectorKind::kMlp ? "mlp" : "nearest_neighbor"},
                {"grid_size", b.selector.grid_size()}};
  if (b.selector.kind() == SelectorKind::kMlp) {
    selector["mlp"] = mlp_json(b.selector.mlp());
  } else {
    selector["features"] = b.selector.features();
    selector["choices"] = b.selector.choices();
  }
  write_json(dir / "selector.json", selector);
  write_json(dir / "grid.json", grid_json(b.grid));
  write_json(dir / "manifest.json",
             {{"format", "segdecomp-bundle"},
              {"version", library_version()},
              {"seed", b.seed},
              {"gamma", b.gamma},
              {"meta_knowledge", b.meta_knowledge},
              {"spline", {{"degree", b.spline.degree}, {"n_basis", b.spline.n_basis}}},
              {"trace",
               {{"outer_choices", b.trace.outer_choices},
                {"global_choice", b.trace.global_choice},
                {"family_anchors", b.trace.family_anchors},
                {"day_choices", day_choices_json(b.trace.day_choices)}}}});
}

SWMetaBundle load_bundle(const std::filesystem::path& dir) {
  SWMetaBundle b;
  decode(dir / "manifest.json", [&](const json& j) {
    if (j.at("format") != "segdecomp-bundle") throw DataError("not a bundle manifest");
    b.seed = j.at("seed").get<std::uint64_t>();
    b.gamma = j.at("gamma").get<std::string>();
    b.meta_knowledge = j.at("meta_knowledge").get<std::map<std::string, std::string>>();
    b.spline.degree = j.at("spline").at("degree").get<int>();
    b.spline.n_basis = j.at("spline").at("n_basis").get<std::size_t>();
    const auto& t = j.at("trace");
    b.trace.outer_choices = t.at("outer_choices").get<std::vector<std::size_t>>();
    b.trace.global_choice = t.at("global_choice").get<std::size_t>();
    b.trace.family_anchors = t.at("family_anchors").get<std::vector<std::size_t>>();
    b.trace.day_choices = day_choices_from(t.at("day_choices"));
    return 0;
  });
  b.vocab = decode(dir / "vocabulary.json", vocab_from);
  b.model = decode(dir / "model.json", model_from);
  b.grid = decode(dir / "grid.json", grid_from);
  b.scaler = decode(dir / "scaler.json", [](const json& j) {
    ScalerStats s{j.at("sensors").get<std::vector<std::string>>(), j.at("mean").get<std::vector<double>>(),
                  j.at("stddev").get<std::vector<double>>()};
    if (s.mean.size() != s.sensors.size() || s.stddev.size() != s.sensors.size())
      throw DataError("scaler vectors differ in length");
    return s;
  });
  b.selector = decode(dir / "selector.json", [](const json& j) {
    const auto grid_size = j.at("grid_size").get<std::size_t>();
    if (j.at("kind") == "mlp") return MetaSelector::from_mlp(mlp_from(j.at("mlp")), grid_size);
    return MetaSelector::nearest_neighbor(j.at("features").get<std::vector<std::vector<double>>>(),
                                          j.at("choices").get<std::vector<std::size_t>>(), grid_size);
  });
  if (b.selector.grid_size() != b.grid.size()) throw DataError(dir.string() + ": selector and grid sizes differ");
  return b;
}

}  // namespace segdecomp
