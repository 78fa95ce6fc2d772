#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "recfair/audit.hpp"
#include "recfair/config.hpp"
#include "recfair/errors.hpp"
#include "recfair/pipeline.hpp"
#include "recfair/rng.hpp"
#include "recfair/split.hpp"
#include "recfair/textio.hpp"
#include "recfair/version.hpp"

namespace fs = std::filesystem;
using namespace recfair;

namespace {

// Exit codes: 0 success, 2 configuration, 3 data, 4 divergence, 1 internal.
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDivergence = 4;
constexpr int kExitInternal = 1;

struct Cli {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  int k = 0;
  std::string algo;
  std::string factor;
  std::string metric;
  int buckets = 0;
  std::string model_path;
  std::string run_dir;

  CLI::Option* seed_opt = nullptr;
  CLI::Option* k_opt = nullptr;
  CLI::Option* buckets_opt = nullptr;
};

void add_common_flags(CLI::App* sub, Cli& cli) {
  sub->add_option("--config", cli.config_path, "JSON run configuration");
  cli.seed_opt = sub->add_option("--seed", cli.seed, "Override the config seed");
  cli.k_opt = sub->add_option("--k", cli.k, "Override the recommendation list size");
  cli.buckets_opt = sub->add_option("--buckets", cli.buckets, "Override the bucket count");
}

RunConfig resolve_config(const Cli& cli, bool need_data, bool need_out) {
  RunConfig config;
  if (!cli.config_path.empty()) config = load_run_config(cli.config_path);
  if (cli.seed_opt && cli.seed_opt->count()) config.seed = cli.seed;
  if (cli.k_opt && cli.k_opt->count()) config.k = cli.k;
  if (cli.buckets_opt && cli.buckets_opt->count()) config.buckets = cli.buckets;
  if (!cli.out.empty()) config.out_dir = cli.out;
  validate_run_config(config, need_data, need_out);
  return config;
}

Algorithm parse_algo(const std::string& tag) {
  auto a = algorithm_from_tag(tag);
  if (!a) throw ConfigError(fmt::format("unknown algorithm tag '{}'", tag));
  return *a;
}

HyperParams config_hyperparams(const RunConfig& config, Algorithm algo) {
  if (auto it = config.hyperparams.find(algo); it != config.hyperparams.end()) return it->second;
  HyperParams hp;
  validate_hyperparams(algo, hp);
  return hp;
}

int cmd_ingest(const Cli& cli) {
  RunConfig config = resolve_config(cli, /*need_data=*/true, /*need_out=*/true);
  const RatingDataset ds = load_config_dataset(config);
  fs::create_directories(config.out_dir);
  save_canonical(ds, config.out_dir);
  fmt::print("wrote canonical dataset to {} ({} users, {} items, {} ratings)\n", config.out_dir,
             ds.num_users(), ds.num_items(), ds.num_ratings());
  return 0;
}

int cmd_stats(const Cli& cli) {
  RunConfig config = resolve_config(cli, /*need_data=*/true, /*need_out=*/false);
  const RatingDataset ds = load_config_dataset(config);
  fmt::print("{}", dataset_stats_csv(ds, /*skip_empty_genders=*/true));
  return 0;
}

int cmd_split(const Cli& cli) {
  RunConfig config = resolve_config(cli, /*need_data=*/true, /*need_out=*/true);
  const RatingDataset ds = load_config_dataset(config);
  const SplitPair split = split_train_test(ds, config.split_ratio, config.seed);
  fs::create_directories(fs::path(config.out_dir) / "train");
  fs::create_directories(fs::path(config.out_dir) / "test");
  save_canonical(split.train, (fs::path(config.out_dir) / "train").string());
  save_canonical(split.test, (fs::path(config.out_dir) / "test").string());
  fmt::print("train: {} ratings, test: {} ratings (ratio {}, seed {})\n",
             split.train.num_ratings(), split.test.num_ratings(),
             format_double(config.split_ratio), config.seed);
  return 0;
}

int cmd_gridsearch(const Cli& cli) {
  RunConfig config = resolve_config(cli, /*need_data=*/true, /*need_out=*/false);
  const RatingDataset ds = load_config_dataset(config);
  const SplitPair split = split_train_test(ds, config.split_ratio, config.seed);
  const SplitPair sub = split_train_test(split.train, kGridTrainRatio, mix_seed(config.seed, 1));

  std::vector<Algorithm> algos =
      cli.algo.empty() ? config.algorithms : std::vector<Algorithm>{parse_algo(cli.algo)};
  for (Algorithm algo : algos) {
    const GridSearchResult result = grid_search(algo, sub.train, sub.test, config.grid, config.k,
                                                config.seed, config.grid_threads);
    const HyperParams& hp = result.best;
    fmt::print(
        "{}: best precision {} (config {}: neighbors={} shrinkage={} factors={} "
        "learning_rate={} l2={} epochs={})\n",
        algorithm_tag(algo), format_double(result.best_precision), result.best_index,
        hp.neighbors, format_double(hp.shrinkage), hp.factors, format_double(hp.learning_rate),
        format_double(hp.l2), hp.epochs);
    if (!cli.out.empty()) {
      fs::create_directories(cli.out);
      std::string csv =
          "index,neighbors,shrinkage,factors,learning_rate,l2,epochs,precision,selected,error\n";
      for (std::size_t c = 0; c < result.table.size(); ++c) {
        const GridEntry& e = result.table[c];
        std::string error = e.error;
        std::replace(error.begin(), error.end(), ',', ';');
        csv += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", c, e.hp.neighbors,
                           format_double(e.hp.shrinkage), e.hp.factors,
                           format_double(e.hp.learning_rate), format_double(e.hp.l2),
                           e.hp.epochs, e.precision ? format_double(*e.precision) : "",
                           c == result.best_index ? 1 : 0, error);
      }
      write_text_file(
          (fs::path(cli.out) / fmt::format("{}.csv", algorithm_tag(algo))).string(), csv);
    }
  }
  return 0;
}

int cmd_train(const Cli& cli) {
  if (cli.algo.empty()) throw ConfigError("train requires --algo");
  RunConfig config = resolve_config(cli, /*need_data=*/true, /*need_out=*/true);
  const Algorithm algo = parse_algo(cli.algo);
  const RatingDataset ds = load_config_dataset(config);
  const SplitPair split = split_train_test(ds, config.split_ratio, config.seed);
  const HyperParams hp = config_hyperparams(config, algo);
  auto model = fit_model(algo, split.train, hp, config.seed);

  fs::path out(config.out_dir);
  if (out.extension() != ".json") {
    fs::create_directories(out);
    out /= fmt::format("{}.json", algorithm_tag(algo));
  } else if (out.has_parent_path()) {
    fs::create_directories(out.parent_path());
  }
  model->save(out.string());
  if (!model->epoch_losses().empty())
    fmt::print("final training loss {}\n", format_double(model->epoch_losses().back()));
  fmt::print("saved {} model to {}\n", algorithm_tag(algo), out.string());
  return 0;
}

int cmd_evaluate(const Cli& cli) {
  if (cli.model_path.empty()) throw ConfigError("evaluate requires --model");
  RunConfig config = resolve_config(cli, /*need_data=*/true, /*need_out=*/false);
  const RatingDataset ds = load_config_dataset(config);
  const SplitPair split = split_train_test(ds, config.split_ratio, config.seed);
  const auto model = load_model(cli.model_path, split.train);
  const auto outcomes =
      compute_outcomes(split, *model, config.k, config.alpha, config.min_test_rating);

  std::string csv = "user_id,gender,precision,miscalibration\n";
  for (const OutcomeMetrics& o : outcomes) {
    const auto idx = ds.user_index(o.user);
    csv += fmt::format("{},{},{},{}\n", o.user, gender_name(ds.user(*idx).gender),
                       format_double(o.precision),
                       o.miscalibration ? format_double(*o.miscalibration) : "");
  }
  if (cli.out.empty()) {
    fmt::print("{}", csv);
  } else {
    if (fs::path(cli.out).has_parent_path())
      fs::create_directories(fs::path(cli.out).parent_path());
    write_text_file(cli.out, csv);
    fmt::print("wrote outcomes for {} users to {}\n", outcomes.size(), cli.out);
  }
  return 0;
}

int cmd_audit(const Cli& cli) {
  if (cli.model_path.empty()) throw ConfigError("audit requires --model");
  RunConfig config = resolve_config(cli, /*need_data=*/true, /*need_out=*/true);
  const RatingDataset ds = load_config_dataset(config);
  const SplitPair split = split_train_test(ds, config.split_ratio, config.seed);
  const auto model = load_model(cli.model_path, split.train);
  const auto outcomes =
      compute_outcomes(split, *model, config.k, config.alpha, config.min_test_rating);
  const auto factors = compute_user_factors(ds);

  std::vector<Factor> audit_factors = config.audit_factors;
  if (!cli.factor.empty()) {
    auto f = factor_from_tag(cli.factor);
    if (!f) throw ConfigError(fmt::format("unknown factor tag '{}'", cli.factor));
    audit_factors = {*f};
  }
  std::vector<Outcome> metrics{Outcome::Precision, Outcome::Miscalibration};
  if (!cli.metric.empty()) {
    auto m = outcome_from_tag(cli.metric);
    if (!m) throw ConfigError(fmt::format("unknown metric tag '{}'", cli.metric));
    metrics = {*m};
  }

  fs::create_directories(config.out_dir);
  const std::string algo_tag(algorithm_tag(model->algorithm()));
  for (Factor factor : audit_factors) {
    for (Outcome metric : metrics) {
      for (Gender gender : {Gender::Male, Gender::Female}) {
        BucketSpec spec{factor, config.buckets, gender};
        const GroupReport report = audit_report(factors, outcomes, ds, spec, metric);
        const std::string base = fmt::format("{}_{}_{}", factor_tag(factor),
                                             outcome_tag(metric), gender_name(gender));
        write_report_csv((fs::path(config.out_dir) / (base + ".csv")).string(), report);
        write_report_sidecar((fs::path(config.out_dir) / (base + ".json")).string(), report,
                             algo_tag, config.seed);
        fmt::print("{}: correlation {}\n", base,
                   report.correlation ? format_double(*report.correlation) : "undefined");
      }
    }
  }
  return 0;
}

int cmd_pipeline(const Cli& cli) {
  RunConfig config = resolve_config(cli, /*need_data=*/true, /*need_out=*/true);
  const PipelineResult result = run_pipeline(config, &std::cerr);
  fmt::print("{}", summary_csv(result.summary));
  return 0;
}

int cmd_export_plots(const Cli& cli) {
  if (cli.run_dir.empty()) throw ConfigError("export-plots requires a run directory");
  const fs::path reports = fs::path(cli.run_dir) / "reports";
  if (!fs::is_directory(reports))
    throw DataError(fmt::format("{} has no reports directory", cli.run_dir));

  struct Line {
    std::string algorithm;
    std::string gender;
    GroupRow row;
  };
  std::map<std::string, std::vector<Line>> plots;  // "<factor>_<metric>" -> lines
  for (const auto& algo_dir : fs::directory_iterator(reports)) {
    if (!algo_dir.is_directory()) continue;
    for (const auto& entry : fs::directory_iterator(algo_dir.path())) {
      if (entry.path().extension() != ".csv") continue;
      fs::path sidecar = entry.path();
      sidecar.replace_extension(".json");
      if (!fs::exists(sidecar)) continue;
      const ReportMeta meta = read_report_sidecar(sidecar.string());
      const auto rows = read_report_csv(entry.path().string());
      const std::string key =
          fmt::format("{}_{}", factor_tag(meta.spec.factor), outcome_tag(meta.metric));
      for (const GroupRow& row : rows)
        plots[key].push_back({meta.algorithm, gender_name(meta.spec.gender), row});
    }
  }
  if (plots.empty()) throw DataError(fmt::format("no reports found under {}", reports.string()));

  const fs::path out_dir = cli.out.empty() ? fs::path(cli.run_dir) / "plots" : fs::path(cli.out);
  fs::create_directories(out_dir);
  for (auto& [key, lines] : plots) {
    std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
      if (a.algorithm != b.algorithm) return a.algorithm < b.algorithm;
      if (a.gender != b.gender) return a.gender < b.gender;
      return a.row.bucket < b.row.bucket;
    });
    std::string csv = "algorithm,gender,bucket,mean_factor,mean_outcome,user_count\n";
    for (const Line& l : lines)
      csv += fmt::format("{},{},{},{},{},{}\n", l.algorithm, l.gender, l.row.bucket,
                         format_double(l.row.mean_factor), format_double(l.row.mean_outcome),
                         l.row.user_count);
    const fs::path path = out_dir / (key + ".csv");
    write_text_file(path.string(), csv);
    fmt::print("wrote {}\n", path.string());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recommender fairness audit toolkit"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  std::map<std::string, Cli> flags;
  auto make_sub = [&](const char* name, const char* desc) {
    CLI::App* sub = app.add_subcommand(name, desc);
    add_common_flags(sub, flags[name]);
    return sub;
  };

  CLI::App* ingest = make_sub("ingest", "Convert a dataset to the canonical CSV layout");
  ingest->add_option("--out", flags["ingest"].out, "Output directory")->required();

  make_sub("stats", "Print per-gender dataset statistics");

  CLI::App* split = make_sub("split", "Write the train/test partition as canonical CSV");
  split->add_option("--out", flags["split"].out, "Output directory")->required();

  CLI::App* gridsearch = make_sub("gridsearch", "Tune hyperparameters on a validation sub-split");
  gridsearch->add_option("--algo", flags["gridsearch"].algo, "Algorithm tag (default: all)");
  gridsearch->add_option("--out", flags["gridsearch"].out, "Directory for grid tables");

  CLI::App* train = make_sub("train", "Fit a model on the training split and checkpoint it");
  train->add_option("--algo", flags["train"].algo, "Algorithm tag")->required();
  train->add_option("--out", flags["train"].out, "Checkpoint file (.json) or directory")
      ->required();

  CLI::App* evaluate = make_sub("evaluate", "Per-user precision and miscalibration");
  evaluate->add_option("--model", flags["evaluate"].model_path, "Model checkpoint")->required();
  evaluate->add_option("--out", flags["evaluate"].out, "Output CSV (default: stdout)");

  CLI::App* audit = make_sub("audit", "Bucketed group reports from a trained model");
  audit->add_option("--model", flags["audit"].model_path, "Model checkpoint")->required();
  audit->add_option("--factor", flags["audit"].factor, "Restrict to one factor tag");
  audit->add_option("--metric", flags["audit"].metric, "Restrict to one outcome metric tag");
  audit->add_option("--out", flags["audit"].out, "Report directory")->required();

  CLI::App* pipeline = make_sub("pipeline", "Full run: split, tune, fit, evaluate, audit");
  pipeline->add_option("--out", flags["pipeline"].out, "Run directory (overrides config)");

  CLI::App* export_plots =
      app.add_subcommand("export-plots", "Merge a run's reports into plot-ready CSVs");
  export_plots->add_option("run_dir", flags["export-plots"].run_dir, "Pipeline run directory")
      ->required();
  export_plots->add_option("--out", flags["export-plots"].out,
                           "Output directory (default: <run_dir>/plots)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (app.got_subcommand(ingest)) return cmd_ingest(flags["ingest"]);
    if (app.got_subcommand("stats")) return cmd_stats(flags["stats"]);
    if (app.got_subcommand(split)) return cmd_split(flags["split"]);
    if (app.got_subcommand(gridsearch)) return cmd_gridsearch(flags["gridsearch"]);
    if (app.got_subcommand(train)) return cmd_train(flags["train"]);
    if (app.got_subcommand(evaluate)) return cmd_evaluate(flags["evaluate"]);
    if (app.got_subcommand(audit)) return cmd_audit(flags["audit"]);
    if (app.got_subcommand(pipeline)) return cmd_pipeline(flags["pipeline"]);
    if (app.got_subcommand(export_plots)) return cmd_export_plots(flags["export-plots"]);
    std::cerr << "error: no subcommand selected\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const TrainingDivergence& e) {
    std::cerr << "training diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
