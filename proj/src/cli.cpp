#include "owdisc/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "owdisc/config.hpp"
#include "owdisc/errors.hpp"
#include "owdisc/io.hpp"
#include "owdisc/kmeans.hpp"
#include "owdisc/matching.hpp"
#include "owdisc/pipeline.hpp"
#include "owdisc/prototypes.hpp"
#include "owdisc/serialize.hpp"
#include "owdisc/synthgen.hpp"
#include "owdisc/version.hpp"

namespace owdisc::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Thrown for problems the user can fix by changing the command line.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigFlags {
  std::string config_path;
  std::optional<double> tau, lambda, temperature, lr_head, lr_adapter;
  std::optional<std::size_t> iterations, batch_size;
  std::optional<std::string> adapter;
  std::optional<std::uint64_t> seed;
};

struct Options {
  ConfigFlags config;
  std::string source, target, truth, out, pred, preset = "s1";
  std::optional<std::size_t> num_target_classes;
  bool estimate = false;
  std::size_t k_min = 0, k_max = 0;
  std::string estimate_mode = "union";
  std::optional<double> entropy_threshold;
  std::optional<std::size_t> seen_count;
};

std::string exact(double value) {
  std::ostringstream s;
  s << std::setprecision(17) << value;
  return s.str();
}

void add_config_flags(CLI::App* app, ConfigFlags& f) {
  app->add_option("--config", f.config_path, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--tau", f.tau, "matching threshold");
  app->add_option("--lambda", f.lambda, "entropy regularizer weight");
  app->add_option("--temperature", f.temperature, "softmax temperature");
  app->add_option("--iters", f.iterations, "fine-tuning iterations");
  app->add_option("--batch-size", f.batch_size, "mini-batch size");
  app->add_option("--lr-head", f.lr_head, "classifier learning rate");
  app->add_option("--lr-adapter", f.lr_adapter, "adapter learning rate");
  app->add_option("--adapter", f.adapter, "adapter kind")->check(CLI::IsMember({"none", "linear", "linear-residual"}));
  app->add_option("--seed", f.seed, "random seed");
}

DiscoveryConfig resolve_config(const ConfigFlags& f) {
  ConfigOverrides overrides;
  if (f.tau) overrides["tau"] = exact(*f.tau);
  if (f.lambda) overrides["lambda"] = exact(*f.lambda);
  if (f.temperature) overrides["temperature"] = exact(*f.temperature);
  if (f.iterations) overrides["iterations"] = std::to_string(*f.iterations);
  if (f.batch_size) overrides["batch_size"] = std::to_string(*f.batch_size);
  if (f.lr_head) overrides["lr_head"] = exact(*f.lr_head);
  if (f.lr_adapter) overrides["lr_adapter"] = exact(*f.lr_adapter);
  if (f.adapter) overrides["adapter_kind"] = *f.adapter;
  if (f.seed) overrides["seed"] = std::to_string(*f.seed);
  try {
    const auto path = f.config_path.empty() ? std::nullopt : std::optional<fs::path>(f.config_path);
    return load_config(path, overrides);
  } catch (const Error& e) {
    throw UsageError(std::string("invalid configuration: ") + e.what());
  }
}

template <typename F>
auto stage(const std::string& name, F&& body) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

EmbeddingSet load_set(const std::string& what, const std::string& path) {
  return stage("load " + what, [&] { return load_embeddings(path); });
}

Labels load_truth(const std::string& path) {
  if (path.empty()) return {};
  return stage("load truth", [&] { return load_labels_csv(path); });
}

void write_json(const fs::path& path, const json& value) {
  stage("write " + path.filename().string(), [&] {
    write_text_file(path, value.dump(2) + "\n");
    return 0;
  });
}

fs::path prepare_out(const std::string& out) {
  if (out.empty()) throw UsageError("--out is required");
  stage("write output", [&] { return fs::create_directories(out); });
  return out;
}

void write_run_info(const fs::path& dir, const std::string& subcommand, const std::vector<std::string>& args,
                    std::uint64_t seed, const std::optional<DiscoveryConfig>& config) {
  json info = {{"version", kVersion}, {"subcommand", subcommand}, {"arguments", args}, {"seed", seed}};
  if (config) info["config"] = *config;
  write_json(dir / "run_info.json", info);
}

std::string percent(const std::optional<double>& value) {
  if (!value) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * *value);
  return buf;
}

std::string eval_summary(const std::optional<EvalReport>& eval) {
  if (!eval) return "no truth labels";
  return "H-score " + percent(eval->h_score) + " (seen " + percent(eval->seen_accuracy) + ", unseen " +
         percent(eval->unseen_accuracy) + ")";
}

void write_discovery_outputs(const fs::path& dir, const PredictionSet& predictions, const RunReport& report) {
  stage("write predictions", [&] {
    save_predictions_csv(predictions, dir / "predictions.csv");
    write_text_file(dir / "train_log.jsonl", training_log_jsonl(report.training_log));
    return 0;
  });
  json report_json = report;
  report_json["training_log"] = "train_log.jsonl";
  write_json(dir / "report.json", report_json);
}

int cmd_synth(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  Scenario scenario;
  try {
    scenario = preset(o.preset);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (o.config.seed) scenario.seed = *o.config.seed;
  const fs::path dir = prepare_out(o.out);
  const ScenarioData data = stage("synth", [&] { return generate(scenario); });
  stage("write scenario", [&] {
    save_embeddings(data.source, dir / "source.cef");
    save_embeddings(data.target, dir / "target.cef");
    save_labels_csv(data.target_truth, dir / "truth.csv");
    return 0;
  });
  json scenario_json = scenario;
  scenario_json["preset"] = o.preset;
  write_json(dir / "scenario.json", scenario_json);
  write_run_info(dir, "synth", args, scenario.seed, std::nullopt);
  out << "synth " << o.preset << ": " << data.source.count() << " source, " << data.target.count()
      << " target samples, " << scenario.target_class_count() << " target classes -> " << dir.string() << "\n";
  return 0;
}

int cmd_discover(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  if (!o.num_target_classes && !o.estimate) throw UsageError("discover needs --num-target-classes N or --estimate");
  if (o.estimate && (o.k_min == 0 || o.k_max == 0)) throw UsageError("--estimate needs --k-min and --k-max");
  const DiscoveryConfig config = resolve_config(o.config);
  const fs::path dir = prepare_out(o.out);
  const EmbeddingSet source = load_set("source", o.source);
  const EmbeddingSet target = load_set("target", o.target);
  const Labels truth = load_truth(o.truth);

  ClassCountSpec classes;
  if (o.num_target_classes) {
    classes = *o.num_target_classes;
  } else {
    EstimateMode mode;
    try {
      mode = parse_estimate_mode(o.estimate_mode);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    classes = EstimateRange{o.k_min, o.k_max, mode};
  }
  const DiscoveryRun run = crow_discover(source, target, classes, config, truth);

  write_discovery_outputs(dir, run.predictions, run.report);
  stage("write model", [&] {
    save_prototypes(run.seen_prototypes, dir / "seen_prototypes.cef");
    save_prototypes(run.target_prototypes, dir / "target_prototypes.cef");
    save_model(run.final_model, dir / "model");
    return 0;
  });
  write_run_info(dir, "discover", args, config.seed, config);
  const auto& match = *run.report.match;
  out << "discover: " << eval_summary(run.report.eval) << "; " << match.prototype_count << " prototypes, "
      << match.matched_count << " matched, " << match.unseen_count << " unseen\n";
  return 0;
}

int cmd_baseline_simple(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  const DiscoveryConfig config = resolve_config(o.config);
  const fs::path dir = prepare_out(o.out);
  const EmbeddingSet source = load_set("source", o.source);
  const EmbeddingSet target = load_set("target", o.target);
  const Labels truth = load_truth(o.truth);
  const BaselineRun run =
      simple_baseline(source, target, *o.num_target_classes, config, *o.entropy_threshold, truth);
  write_discovery_outputs(dir, run.predictions, run.report);
  write_run_info(dir, "baseline-simple", args, config.seed, config);
  out << "baseline-simple: " << eval_summary(run.report.eval) << "; " << run.report.simple->marked_unseen
      << " samples flagged unseen\n";
  return 0;
}

int cmd_baseline_kmeans(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  const DiscoveryConfig config = resolve_config(o.config);
  const fs::path dir = prepare_out(o.out);
  const EmbeddingSet target = load_set("target", o.target);
  const Labels truth = load_truth(o.truth);
  const KMeansBaselineResult result = kmeans_baseline(target, *o.num_target_classes, truth, config);

  stage("write clusters", [&] {
    std::ostringstream csv;
    csv << "sample_index,cluster\n";
    for (std::size_t i = 0; i < result.clusters.size(); ++i) csv << i << ',' << result.clusters[i] << '\n';
    write_text_file(dir / "clusters.csv", csv.str());
    return 0;
  });
  json mapping = json::array();
  for (const auto& [cluster, label] : result.accuracy.mapping) mapping.push_back({cluster, label});
  write_json(dir / "report.json", {{"method", "kmeans"},
                                   {"k", *o.num_target_classes},
                                   {"config", config},
                                   {"accuracy", result.accuracy.accuracy},
                                   {"mapping", std::move(mapping)}});
  write_run_info(dir, "baseline-kmeans", args, config.seed, config);
  out << "baseline-kmeans: clustering accuracy " << percent(result.accuracy.accuracy) << " with k = "
      << *o.num_target_classes << "\n";
  return 0;
}

int cmd_estimate_k(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  const DiscoveryConfig config = resolve_config(o.config);
  EstimateMode mode;
  try {
    mode = parse_estimate_mode(o.estimate_mode);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const fs::path dir = prepare_out(o.out);
  const EmbeddingSet source = load_set("source", o.source);
  const EmbeddingSet target = load_set("target", o.target);
  const EstimateResult result =
      stage("estimate", [&] { return estimate_num_classes(source, target, {o.k_min, o.k_max, mode}, config); });
  write_json(dir / "estimate.json", result);
  write_run_info(dir, "estimate-k", args, config.seed, config);
  out << "estimate-k (" << to_string(mode) << "): k = " << result.k << "\n";
  return 0;
}

int cmd_match_only(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  const DiscoveryConfig config = resolve_config(o.config);
  const fs::path dir = prepare_out(o.out);
  const EmbeddingSet source = load_set("source", o.source);
  const EmbeddingSet target = load_set("target", o.target);
  const PrototypeBank seen = stage("seen-prototypes", [&] { return train_seen_prototypes(source, config); });
  const PrototypeBank protos =
      stage("target-prototypes", [&] { return target_prototypes(target, *o.num_target_classes, config); });
  const MatchResult match = stage("match", [&] { return match_prototypes(source, protos, config.tau); });
  stage("write prototypes", [&] {
    save_prototypes(seen, dir / "seen_prototypes.cef");
    save_prototypes(protos, dir / "target_prototypes.cef");
    return 0;
  });
  write_json(dir / "match.json", match);
  write_run_info(dir, "match-only", args, config.seed, config);
  out << "match-only: " << match.prototype_count() << " prototypes, " << match.matched_count() << " matched, "
      << match.unseen_prototype_indices.size() << " unseen\n";
  return 0;
}

int cmd_eval(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  const PredictionSet predictions = stage("load predictions", [&] { return load_predictions_csv(o.pred); });
  const Labels truth = load_truth(o.truth);
  const EvalReport report =
      stage("eval", [&] { return evaluate(predictions, truth, ClassCatalog{*o.seen_count, std::nullopt}); });
  if (o.out.empty()) {
    out << json(report).dump(2) << "\n";
    return 0;
  }
  const fs::path dir = prepare_out(o.out);
  write_json(dir / "eval.json", report);
  write_run_info(dir, "eval", args, o.config.seed.value_or(0), std::nullopt);
  out << "eval: " << eval_summary(report) << "\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Open-world class discovery on precomputed embeddings", "owdisc"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options o;
  using Handler = std::function<int(const Options&, const std::vector<std::string>&, std::ostream&)>;
  std::vector<std::pair<CLI::App*, Handler>> commands;

  auto* synth = app.add_subcommand("synth", "write a synthetic scenario");
  synth->add_option("--preset", o.preset, "scenario preset")->check(CLI::IsMember(preset_names()));
  synth->add_option("--seed", o.config.seed, "scenario seed (defaults to the preset's)");
  synth->add_option("--out", o.out, "output directory")->required();
  commands.emplace_back(synth, cmd_synth);

  auto* discover = app.add_subcommand("discover", "cluster-then-match discovery");
  discover->add_option("--source", o.source, "labeled source embeddings")->required()->check(CLI::ExistingFile);
  discover->add_option("--target", o.target, "unlabeled target embeddings")->required()->check(CLI::ExistingFile);
  auto* n_opt = discover->add_option("--num-target-classes", o.num_target_classes, "number of target classes");
  auto* est_opt = discover->add_flag("--estimate", o.estimate, "estimate the number of target classes");
  n_opt->excludes(est_opt);
  discover->add_option("--k-min", o.k_min, "smallest candidate class count")->needs(est_opt);
  discover->add_option("--k-max", o.k_max, "largest candidate class count")->needs(est_opt);
  discover->add_option("--estimate-mode", o.estimate_mode, "union or target-only")->needs(est_opt);
  discover->add_option("--truth", o.truth, "target truth labels (CSV)")->check(CLI::ExistingFile);
  discover->add_option("--out", o.out, "output directory")->required();
  add_config_flags(discover, o.config);
  commands.emplace_back(discover, cmd_discover);

  auto* simple = app.add_subcommand("baseline-simple", "entropy-threshold match-then-cluster baseline");
  simple->add_option("--source", o.source, "labeled source embeddings")->required()->check(CLI::ExistingFile);
  simple->add_option("--target", o.target, "unlabeled target embeddings")->required()->check(CLI::ExistingFile);
  simple->add_option("--num-target-classes", o.num_target_classes, "number of target classes")->required();
  simple->add_option("--entropy-threshold", o.entropy_threshold, "entropy above which a sample is unseen")->required();
  simple->add_option("--truth", o.truth, "target truth labels (CSV)")->check(CLI::ExistingFile);
  simple->add_option("--out", o.out, "output directory")->required();
  add_config_flags(simple, o.config);
  commands.emplace_back(simple, cmd_baseline_simple);

  auto* km = app.add_subcommand("baseline-kmeans", "plain K-means on the target");
  km->add_option("--target", o.target, "target embeddings")->required()->check(CLI::ExistingFile);
  km->add_option("--truth", o.truth, "target truth labels (CSV)")->required()->check(CLI::ExistingFile);
  km->add_option("--num-target-classes", o.num_target_classes, "number of clusters")->required();
  km->add_option("--out", o.out, "output directory")->required();
  add_config_flags(km, o.config);
  commands.emplace_back(km, cmd_baseline_kmeans);

  auto* est = app.add_subcommand("estimate-k", "estimate the number of target classes");
  est->add_option("--source", o.source, "labeled source embeddings")->required()->check(CLI::ExistingFile);
  est->add_option("--target", o.target, "unlabeled target embeddings")->required()->check(CLI::ExistingFile);
  est->add_option("--k-min", o.k_min, "smallest candidate class count")->required();
  est->add_option("--k-max", o.k_max, "largest candidate class count")->required();
  est->add_option("--mode", o.estimate_mode, "union or target-only");
  est->add_option("--out", o.out, "output directory")->required();
  add_config_flags(est, o.config);
  commands.emplace_back(est, cmd_estimate_k);

  auto* match = app.add_subcommand("match-only", "dump the co-occurrence, distribution and match matrices");
  match->add_option("--source", o.source, "labeled source embeddings")->required()->check(CLI::ExistingFile);
  match->add_option("--target", o.target, "unlabeled target embeddings")->required()->check(CLI::ExistingFile);
  match->add_option("--num-target-classes", o.num_target_classes, "number of target prototypes")->required();
  match->add_option("--out", o.out, "output directory")->required();
  add_config_flags(match, o.config);
  commands.emplace_back(match, cmd_match_only);

  auto* ev = app.add_subcommand("eval", "score predictions against truth labels");
  ev->add_option("--pred", o.pred, "predictions CSV")->required()->check(CLI::ExistingFile);
  ev->add_option("--truth", o.truth, "truth labels CSV")->required()->check(CLI::ExistingFile);
  ev->add_option("--seen-count", o.seen_count, "number of seen classes")->required();
  ev->add_option("--out", o.out, "output directory (prints JSON when omitted)");
  ev->add_option("--seed", o.config.seed, "recorded in run_info.json");
  commands.emplace_back(ev, cmd_eval);

  std::vector<std::string> args(argv + (argc > 0 ? 1 : 0), argv + argc);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    for (const auto& [command, handler] : commands) {
      if (command->parsed()) return handler(o, args, out);
    }
    throw UsageError("no subcommand given");
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const StageError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace owdisc::cli
