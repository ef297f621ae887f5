// segdecomp: command line front end for ingesting CASAS logs, segmenting,
// training and running cross-validated experiments.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "segdecomp/config.hpp"
#include "segdecomp/errors.hpp"
#include "segdecomp/harness.hpp"
#include "segdecomp/io.hpp"

namespace fs = std::filesystem;
using namespace segdecomp;

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kRuntime = 4 };

struct Common {
  std::string config;
  std::string input;
  std::optional<std::uint64_t> seed;
  std::optional<double> slice_seconds;
  std::string out;
  std::size_t threads = 0;
};

void add_common(CLI::App* cmd, Common& c, bool input) {
  cmd->add_option("--config", c.config, "Experiment config (JSON)");
  if (input) cmd->add_option("--input", c.input, "CASAS log file (instead of the config dataset)");
  cmd->add_option("--seed", c.seed, "Override the config seed");
  cmd->add_option("--out", c.out, "Output file or directory");
  cmd->add_option("--slice-seconds", c.slice_seconds, "Evaluation slice width in seconds");
}

ExperimentConfig resolve(const Common& c, bool need_config) {
  ExperimentConfig cfg;
  if (!c.config.empty()) {
    cfg = load_experiment_config(c.config);
  } else if (need_config || c.input.empty()) {
    throw ConfigError("--config is required for this command");
  }
  if (!c.input.empty()) {
    cfg.dataset = DatasetSource{c.input, std::nullopt};
    cfg.canonical += "|input=" + c.input;
  }
  if (c.seed) cfg.seed = *c.seed;
  if (c.slice_seconds) {
    if (!(*c.slice_seconds > 0)) throw ConfigError("--slice-seconds must be positive");
    cfg.slice_seconds = *c.slice_seconds;
  }
  if (c.threads > 0) cfg.threads = c.threads;
  // Overrides change the experiment, so they take part in the hash.
  cfg.canonical += "|seed=" + std::to_string(cfg.seed) + "|slice=" + std::to_string(cfg.slice_seconds);
  return cfg;
}

LabeledDataset dataset_of(const ExperimentConfig& cfg) {
  std::vector<std::string> warnings;
  auto d = load_dataset(cfg.dataset, 0, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  return d;
}

void write_text(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + file.string());
  out << text;
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char ch : text) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

const MethodSpec* first_meta(const ExperimentConfig& cfg) {
  for (const auto& m : cfg.methods)
    if (m.kind == MethodKind::kSWMeta) return &m;
  return nullptr;
}

int cmd_ingest(const Common& c) {
  const auto cfg = resolve(c, false);
  const auto data = dataset_of(cfg);
  std::printf("%zu events, %zu intervals, %zu labels\n", data.stream.size(), data.truth.intervals().size(),
              data.label_set.size());
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    std::ofstream events(fs::path(c.out) / "dataset.txt", std::ios::binary);
    std::ofstream truth(fs::path(c.out) / "truth.tsv", std::ios::binary);
    if (!events || !truth) throw IoError("cannot write into " + c.out);
    write_casas(events, data);
    write_track(truth, data.truth);
  }
  return kOk;
}

int cmd_stats(const Common& c) {
  const auto cfg = resolve(c, false);
  std::ostringstream text;
  print_stats(text, dataset_stats(dataset_of(cfg)));
  std::cout << text.str();
  if (!c.out.empty()) write_text(c.out, text.str());
  return kOk;
}

int cmd_segment(const Common& c, const std::string& decomposer) {
  const auto cfg = resolve(c, false);
  const auto data = dataset_of(cfg);
  const auto config = DecomposerConfig::parse(decomposer);
  std::ostringstream csv;
  csv << "index,first,last,start,end,events,label\n";
  std::size_t i = 0;
  for (const auto& day : partition_by_day(data)) {
    // Day-local indices are shifted back to positions in the full stream.
    const auto offset = static_cast<std::size_t>(
        std::lower_bound(data.stream.begin(), data.stream.end(), day.stream.first_time(),
                         [](const SensorEvent& e, Timestamp t) { return e.at < t; }) -
        data.stream.begin());
    for (const auto& seg : decompose(day.stream, config))
      csv << i++ << ',' << offset + seg.first << ',' << offset + seg.last << ',' << format_iso(seg.start) << ','
          << format_iso(seg.end) << ',' << seg.event_count() << ',' << csv_field(assign_segment_label(seg, day.truth)) << '\n';
  }
  if (c.out.empty()) {
    std::cout << csv.str();
  } else {
    write_text(c.out, csv.str());
    std::printf("%zu segments written to %s\n", i, c.out.c_str());
  }
  return kOk;
}

int cmd_train(const Common& c, const std::string& decomposer) {
  const auto cfg = resolve(c, false);
  if (c.out.empty()) throw ConfigError("--out is required for train");
  const auto days = partition_by_day(dataset_of(cfg));
  const auto fp = fit_fixed(days, DecomposerConfig::parse(decomposer), cfg.pipeline_options());
  save_fixed_pipeline(fp, c.out);
  std::printf("trained %s on %zu days (%zu tokens, %zu classes)\n", fp.config.to_string().c_str(), days.size(),
              fp.vocab.size(), fp.model.classes().size());
  return kOk;
}

int run_and_emit(ExperimentConfig cfg, const Common& c, bool with_meta) {
  if (!with_meta) std::erase_if(cfg.methods, [](const MethodSpec& m) { return m.kind == MethodKind::kSWMeta; });
  if (cfg.methods.empty()) throw ConfigError("config lists no methods to run");
  RunHooks hooks;
  hooks.log = [](const std::string& s) { std::cerr << s << '\n'; };
  const auto report = run_experiment(cfg, hooks);
  const fs::path dir = c.out.empty() ? fs::path("segdecomp-report") : fs::path(c.out);
  emit_report(report, dir);
  std::cout << format_table(report);
  for (const auto& m : report.methods)
    if (m.kind == MethodKind::kSWMeta) {
      const auto adv = report_meta_advantage(report, m.name);
      if (!adv.best_fixed_method.empty())
        std::printf("%s vs best fixed (%s): F1 difference %+.4f, improvement %s\n", m.name.c_str(),
                    adv.best_fixed_method.c_str(), adv.advantage, adv.holds ? "yes" : "no");
    }
  std::printf("report written to %s (%.1f s)\n", dir.string().c_str(), report.runtime_seconds);
  return kOk;
}

int cmd_meta_train(const Common& c) {
  const auto cfg = resolve(c, true);
  if (c.out.empty()) throw ConfigError("--out is required for meta-train");
  const MethodSpec* m = first_meta(cfg);
  SWMetaHyper hyper = m ? m->hyper : SWMetaHyper{};
  hyper.seed = cfg.seed;
  const auto days = partition_by_day(dataset_of(cfg));
  const auto bundle = swmeta_train(days, hyper, cfg.pipeline_options());
  save_bundle(bundle, c.out);
  std::printf("bundle for %zu days written to %s\n", days.size(), c.out.c_str());
  for (const auto& [date, choice] : bundle.trace.day_choices)
    std::printf("  %s  %s\n", format_date(date).c_str(), bundle.grid[choice].to_string().c_str());
  return kOk;
}

int cmd_divergence(const Common& c) {
  const auto cfg = resolve(c, true);
  const auto points = run_divergence_study(dataset_of(cfg), cfg.divergence.family, cfg.divergence.sizes, cfg.folds,
                                           cfg.pipeline_options());
  const auto csv = divergence_csv(points);
  std::cout << csv;
  if (!c.out.empty()) write_text(c.out, csv);
  return kOk;
}

int cmd_report(const Common& c) {
  if (c.input.empty()) throw ConfigError("--input <report.json> is required for report");
  const auto report = read_report(c.input);
  std::cout << format_table(report);
  for (const auto& m : report.methods)
    if (m.kind == MethodKind::kSWMeta) {
      const auto adv = report_meta_advantage(report, m.name);
      if (!adv.best_fixed_method.empty())
        std::printf("%s: meta loss %.4f, best fixed loss %.4f (%s), difference %+.4f\n", m.name.c_str(),
                    adv.meta_loss, adv.best_fixed_loss, adv.best_fixed_method.c_str(), adv.difference);
    }
  if (!c.out.empty()) emit_report(report, c.out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Segmentation, composition and meta-decomposition for activity recognition"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(library_version()));

  Common c;
  std::string decomposer = "ew:w=20,s=20";
  auto* ingest = app.add_subcommand("ingest", "Parse a CASAS log and write a normalised copy");
  auto* stats = app.add_subcommand("stats", "Print dataset statistics");
  auto* segment = app.add_subcommand("segment", "Decompose a dataset and write segments as CSV");
  auto* train = app.add_subcommand("train", "Train a fixed-decomposer model on the whole dataset");
  auto* evaluate = app.add_subcommand("evaluate", "Cross-validate the fixed and grid-best methods");
  auto* meta_train = app.add_subcommand("meta-train", "Train an SWMeta bundle on the whole dataset");
  auto* meta_eval = app.add_subcommand("meta-eval", "Cross-validate every configured method, SWMeta included");
  auto* divergence = app.add_subcommand("divergence", "Classic versus time-slice F1 across window sizes");
  auto* report = app.add_subcommand("report", "Print the table of a stored report");
  for (auto* cmd : {ingest, stats, segment, train, evaluate, meta_train, meta_eval, divergence, report}) {
    add_common(cmd, c, cmd != evaluate && cmd != meta_train && cmd != meta_eval && cmd != divergence);
    cmd->add_option("--threads", c.threads, "Worker threads (overrides the config)");
  }
  segment->add_option("--decomposer", decomposer, "Decomposer, e.g. ew:w=5,s=2 or tw:w=60,s=30");
  train->add_option("--decomposer", decomposer, "Decomposer, e.g. ew:w=5,s=2 or tw:w=60,s=30");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*ingest) return cmd_ingest(c);
    if (*stats) return cmd_stats(c);
    if (*segment) return cmd_segment(c, decomposer);
    if (*train) return cmd_train(c, decomposer);
    if (*evaluate) return run_and_emit(resolve(c, true), c, false);
    if (*meta_train) return cmd_meta_train(c);
    if (*meta_eval) return run_and_emit(resolve(c, true), c, true);
    if (*divergence) return cmd_divergence(c);
    if (*report) return cmd_report(c);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}
