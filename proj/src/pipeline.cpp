#include "recfair/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "recfair/audit.hpp"
#include "recfair/errors.hpp"
#include "recfair/rng.hpp"
#include "recfair/split.hpp"
#include "recfair/textio.hpp"

namespace recfair {

namespace {

namespace fs = std::filesystem;

/// Exclusive lock on <dir>/run.lock; removed only if this process made it.
class RunLock {
 public:
  explicit RunLock(const fs::path& dir) : path_(dir / "run.lock") {
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0)
      throw ConfigError(fmt::format(
          "{} already exists; another run is active (or crashed — delete the file to retry)",
          path_.string()));
    ::close(fd);
  }
  ~RunLock() { ::unlink(path_.c_str()); }
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  fs::path path_;
};

void note(std::ostream* progress, const std::string& line) {
  if (progress) *progress << line << '\n' << std::flush;
}

// Runs one pipeline stage; failures keep their type but gain a stage tag.
// Precondition violations surfacing here stem from the run configuration.
template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", name, e.what()));
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", name, e.what()));
  } catch (const TrainingDivergence& e) {
    throw TrainingDivergence(e.epoch(), fmt::format("{}: {}", name, e.what()));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("{}: {}", name, e.what()));
  }
}

std::string grid_csv(const GridSearchResult& result) {
  std::string csv =
      "index,neighbors,shrinkage,factors,learning_rate,l2,epochs,precision,selected,error\n";
  for (std::size_t c = 0; c < result.table.size(); ++c) {
    const GridEntry& e = result.table[c];
    std::string error = e.error;
    std::replace(error.begin(), error.end(), ',', ';');
    csv += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", c, e.hp.neighbors,
                       format_double(e.hp.shrinkage), e.hp.factors,
                       format_double(e.hp.learning_rate), format_double(e.hp.l2), e.hp.epochs,
                       e.precision ? format_double(*e.precision) : "",
                       c == result.best_index ? 1 : 0, error);
  }
  return csv;
}

std::string outcomes_csv(const RatingDataset& ds, const std::vector<OutcomeMetrics>& outcomes) {
  std::string csv = "user_id,gender,precision,miscalibration\n";
  for (const OutcomeMetrics& o : outcomes) {
    const auto idx = ds.user_index(o.user);
    csv += fmt::format("{},{},{},{}\n", o.user, gender_name(ds.user(*idx).gender),
                       format_double(o.precision),
                       o.miscalibration ? format_double(*o.miscalibration) : "");
  }
  return csv;
}

}  // namespace

std::string dataset_stats_csv(const RatingDataset& ds, bool skip_empty_genders) {
  std::string csv = "gender,users,ratings,mean_anomaly,mean_entropy,mean_size\n";
  for (const GenderStats& s : gender_stats(ds)) {
    if (skip_empty_genders && s.users == 0) continue;
    csv += fmt::format("{},{},{},{},{},{}\n", gender_name(s.gender), s.users, s.ratings,
                       format_double(s.mean_anomaly), format_double(s.mean_entropy),
                       format_double(s.mean_size));
  }
  return csv;
}

std::string summary_csv(const std::vector<SummaryRow>& summary) {
  std::string csv = "algorithm,gender,users,precision,miscalibration\n";
  for (const SummaryRow& row : summary)
    csv += fmt::format("{},{},{},{},{}\n", algorithm_tag(row.algorithm),
                       gender_name(row.gender), row.users, format_double(row.precision),
                       row.miscalibration ? format_double(*row.miscalibration) : "");
  return csv;
}

PipelineResult run_pipeline(const RunConfig& config, std::ostream* progress) {
  validate_run_config(config, /*need_data=*/true, /*need_out=*/true);

  const fs::path run_dir(config.out_dir);
  fs::create_directories(run_dir);
  RunLock lock(run_dir);
  fs::create_directories(run_dir / "grids");
  fs::create_directories(run_dir / "models");
  fs::create_directories(run_dir / "outcomes");

  write_text_file((run_dir / "resolved_config.json").string(), resolved_config_json(config));

  note(progress, "load: reading dataset");
  const RatingDataset ds = stage("load", [&] { return load_config_dataset(config); });
  note(progress, fmt::format("load: {} users, {} items, {} ratings", ds.num_users(),
                             ds.num_items(), ds.num_ratings()));
  write_text_file((run_dir / "dataset_stats.csv").string(), dataset_stats_csv(ds));

  note(progress, "split: partitioning ratings");
  const SplitPair split =
      stage("split", [&] { return split_train_test(ds, config.split_ratio, config.seed); });

  const std::vector<UserFactors> factors =
      stage("factors", [&] { return compute_user_factors(ds); });

  PipelineResult result;
  result.run_dir = run_dir.string();

  for (Algorithm algo : config.algorithms) {
    const char* tag = algorithm_tag(algo);

    HyperParams hp;
    if (auto it = config.hyperparams.find(algo); it != config.hyperparams.end()) {
      hp = it->second;
      note(progress, fmt::format("tune[{}]: using fixed hyperparameters", tag));
    } else {
      note(progress, fmt::format("tune[{}]: grid search", tag));
      const GridSearchResult grid = stage("tune", [&] {
        const SplitPair sub =
            split_train_test(split.train, kGridTrainRatio, mix_seed(config.seed, 1));
        return grid_search(algo, sub.train, sub.test, config.grid, config.k, config.seed,
                           config.grid_threads);
      });
      write_text_file((run_dir / "grids" / fmt::format("{}.csv", tag)).string(),
                      grid_csv(grid));
      hp = grid.best;
      note(progress, fmt::format("tune[{}]: best validation precision {}", tag,
                                 format_double(grid.best_precision)));
    }

    note(progress, fmt::format("fit[{}]: training on the full training split", tag));
    const auto model = stage("fit", [&] { return fit_model(algo, split.train, hp, config.seed); });
    stage("fit", [&] {
      model->save((run_dir / "models" / fmt::format("{}.json", tag)).string());
      return 0;
    });

    note(progress, fmt::format("evaluate[{}]: scoring test users", tag));
    const std::vector<OutcomeMetrics> outcomes = stage("evaluate", [&] {
      return compute_outcomes(split, *model, config.k, config.alpha, config.min_test_rating);
    });
    write_text_file((run_dir / "outcomes" / fmt::format("{}.csv", tag)).string(),
                    outcomes_csv(ds, outcomes));

    note(progress, fmt::format("audit[{}]: bucketed group reports", tag));
    const fs::path report_dir = run_dir / "reports" / tag;
    fs::create_directories(report_dir);
    stage("audit", [&] {
      for (Factor factor : config.audit_factors) {
        for (Outcome metric : {Outcome::Precision, Outcome::Miscalibration}) {
          for (Gender gender : {Gender::Male, Gender::Female}) {
            BucketSpec spec{factor, config.buckets, gender};
            const GroupReport report = audit_report(factors, outcomes, ds, spec, metric);
            const std::string base =
                fmt::format("{}_{}_{}", factor_tag(factor), outcome_tag(metric),
                            gender_name(gender));
            write_report_csv((report_dir / (base + ".csv")).string(), report);
            write_report_sidecar((report_dir / (base + ".json")).string(), report, tag,
                                 config.seed);
          }
        }
      }
      return 0;
    });

    for (Gender gender : {Gender::Male, Gender::Female}) {
      SummaryRow row;
      row.algorithm = algo;
      row.gender = gender;
      double precision_sum = 0.0, miscal_sum = 0.0;
      int miscal_count = 0;
      for (const OutcomeMetrics& o : outcomes) {
        const auto idx = ds.user_index(o.user);
        if (ds.user(*idx).gender != gender) continue;
        ++row.users;
        precision_sum += o.precision;
        if (o.miscalibration) {
          miscal_sum += *o.miscalibration;
          ++miscal_count;
        }
      }
      if (row.users > 0) row.precision = precision_sum / row.users;
      if (miscal_count > 0) row.miscalibration = miscal_sum / miscal_count;
      result.summary.push_back(row);
    }
  }

  write_text_file((run_dir / "summary.csv").string(), summary_csv(result.summary));
  note(progress, fmt::format("done: artifacts in {}", run_dir.string()));
  return result;
}

}  // namespace recfair
