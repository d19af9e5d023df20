// mibench: command-line runner for the mutual-information estimation benchmark.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "mibench/bench.hpp"
#include "mibench/errors.hpp"
#include "mibench/gradsuite.hpp"
#include "mibench/idx.hpp"
#include "mibench/longrun.hpp"
#include "mibench/oracle.hpp"
#include "mibench/selfconsistency.hpp"

namespace {

enum ExitCode { kOk = 0, kConfig = 1, kRunFailure = 2, kIo = 3 };

std::vector<mibench::EstimatorVariant> parse_estimator_list(const std::string& list) {
  std::vector<mibench::EstimatorVariant> out;
  std::stringstream ss(list);
  std::string tag;
  while (std::getline(ss, tag, ',')) {
    if (!tag.empty()) out.push_back(mibench::parse_estimator_tag(tag));
  }
  if (out.empty()) throw mibench::ConfigError("no estimators given");
  return out;
}

struct GridOptions {
  std::string config;
  std::string out;
  std::string format = "csv";
  int parallelism = 1;
  std::optional<std::uint64_t> seed;
  std::vector<int> dims;
  std::vector<double> mi_targets;
  std::vector<Eigen::Index> train_sizes;
  std::vector<bool> cubic;
  std::string estimators;
  std::optional<int> n_seeds;
  std::optional<Eigen::Index> eval_size;
  std::optional<int> epochs;
  std::optional<Eigen::Index> batch_size;
  std::optional<double> learning_rate;
  std::vector<int> hidden_dims;
  std::optional<Eigen::Index> eval_batch;
  bool no_wall_time = false;
};

int run_grid_command(const GridOptions& o) {
  mibench::ExperimentGrid grid;
  if (!o.config.empty()) grid = mibench::read_grid_config(o.config);
  if (!o.dims.empty()) grid.dims = o.dims;
  if (!o.mi_targets.empty()) grid.mi_targets = o.mi_targets;
  if (!o.train_sizes.empty()) grid.train_sizes = o.train_sizes;
  if (!o.cubic.empty()) grid.cubic = o.cubic;
  if (o.n_seeds) grid.n_seeds = *o.n_seeds;
  if (o.eval_size) grid.eval_size = *o.eval_size;
  if (o.seed) grid.base_seed = *o.seed;
  if (o.no_wall_time) grid.record_wall_time = false;
  if (!o.estimators.empty()) {
    grid.estimators.clear();
    for (const auto& v : parse_estimator_list(o.estimators)) grid.estimators.push_back({.variant = v});
  }
  if (grid.estimators.empty()) grid.estimators.push_back({.variant = mibench::Demi{0.5}});
  for (mibench::EstimatorSpec& s : grid.estimators) {
    if (o.epochs) s.epochs = *o.epochs;
    if (o.batch_size) s.batch_size = *o.batch_size;
    if (o.learning_rate) s.learning_rate = *o.learning_rate;
    if (!o.hidden_dims.empty()) s.hidden_dims = o.hidden_dims;
    if (o.eval_batch) s.eval_batch = *o.eval_batch;
  }

  const auto format = o.format == "json" ? mibench::ReportFormat::kJson : mibench::ReportFormat::kCsv;
  std::cerr << fmt::format("running {} runs with parallelism {}\n", grid.run_count(), o.parallelism);
  const std::vector<mibench::ResultRow> rows = mibench::run_grid(grid, o.parallelism);
  mibench::emit_report(rows, format, o.out);
  std::cout << mibench::format_summary(mibench::summarize(rows));
  for (const auto& r : rows) {
    if (r.status != "ok") return kRunFailure;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mutual information estimator benchmark"};
  app.require_subcommand(1);

  GridOptions grid;
  auto* grid_cmd = app.add_subcommand("grid", "Train and evaluate estimators over an experiment grid");
  grid_cmd->add_option("--config", grid.config, "JSON grid configuration")->check(CLI::ExistingFile);
  grid_cmd->add_option("--out", grid.out, "Report path")->required();
  grid_cmd->add_option("--format", grid.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
  grid_cmd->add_option("--parallelism", grid.parallelism, "Worker threads")->check(CLI::PositiveNumber);
  grid_cmd->add_option("--seed,--base-seed,--base_seed", grid.seed, "Base seed");
  grid_cmd->add_option("--dims", grid.dims)->delimiter(',');
  grid_cmd->add_option("--mi-targets,--mi_targets", grid.mi_targets)->delimiter(',');
  grid_cmd->add_option("--train-sizes,--train_sizes", grid.train_sizes)->delimiter(',');
  grid_cmd->add_option("--cubic", grid.cubic)->delimiter(',');
  grid_cmd->add_option("--estimators", grid.estimators, "Comma-separated tags, e.g. demi(0.5),smile(inf)");
  grid_cmd->add_option("--n-seeds,--n_seeds", grid.n_seeds);
  grid_cmd->add_option("--eval-size,--eval_size", grid.eval_size);
  grid_cmd->add_option("--epochs", grid.epochs);
  grid_cmd->add_option("--batch-size,--batch_size", grid.batch_size);
  grid_cmd->add_option("--learning-rate,--learning_rate", grid.learning_rate);
  grid_cmd->add_option("--hidden-dims,--hidden_dims", grid.hidden_dims)->delimiter(',');
  grid_cmd->add_option("--eval-batch,--eval_batch", grid.eval_batch, "InfoNCE evaluation block size");
  grid_cmd->add_flag("--no-wall-time", grid.no_wall_time, "Report wall_time_s as 0 for byte-identical reruns");

  mibench::LongRunConfig lr;
  std::string lr_estimators = "smile(1),smile(5),smile(inf),demi(0.5)";
  std::string lr_out;
  auto* lr_cmd = app.add_subcommand("longrun", "Stream fresh batches and trace per-step estimates");
  lr_cmd->add_option("--dim", lr.dim);
  lr_cmd->add_option("--mi", lr.mi);
  lr_cmd->add_option("--steps", lr.steps);
  lr_cmd->add_option("--batch", lr.batch_size);
  lr_cmd->add_option("--estimators", lr_estimators);
  lr_cmd->add_option("--seed", lr.seed);
  lr_cmd->add_option("--record-every", lr.record_every);
  lr_cmd->add_option("--smoothing", lr.smoothing);
  lr_cmd->add_option("--learning-rate", lr.learning_rate);
  lr_cmd->add_flag("--cubic", lr.cubic);
  lr_cmd->add_option("--out", lr_out)->required();

  mibench::SelfConsistencyConfig sc;
  std::string sc_images;
  std::string sc_labels;
  std::string sc_out;
  auto* sc_cmd = app.add_subcommand("selfconsistency", "Row-masking self-consistency tests on IDX images");
  sc_cmd->add_option("--images", sc_images)->required();
  sc_cmd->add_option("--labels", sc_labels);
  sc_cmd->add_option("--rows-step", sc.rows_step);
  sc_cmd->add_option("--epochs", sc.epochs);
  sc_cmd->add_option("--seed", sc.seed);
  sc_cmd->add_option("--eval-size", sc.eval_size);
  sc_cmd->add_option("--out", sc_out)->required();

  double tolerance = 1e-4;
  int trials = 20;
  std::uint64_t gc_seed = 0;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every training loss");
  gc_cmd->add_option("--tolerance", tolerance);
  gc_cmd->add_option("--trials", trials);
  gc_cmd->add_option("--seed", gc_seed);

  int or_dim = 20;
  double or_mi = 10.0;
  Eigen::Index or_n = 10240;
  std::uint64_t or_seed = 0;
  bool or_cubic = false;
  auto* or_cmd = app.add_subcommand("oracle", "Sample-average estimate with the exact density ratio");
  or_cmd->add_option("--dim", or_dim);
  or_cmd->add_option("--mi", or_mi);
  or_cmd->add_option("--n", or_n);
  or_cmd->add_option("--seed", or_seed);
  or_cmd->add_flag("--cubic", or_cubic);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (grid_cmd->parsed()) return run_grid_command(grid);
    if (lr_cmd->parsed()) {
      lr.estimators = parse_estimator_list(lr_estimators);
      mibench::write_trace_csv(lr_out, mibench::run_longrun(lr));
      return kOk;
    }
    if (sc_cmd->parsed()) {
      const mibench::ImageSet images = mibench::read_idx_images(sc_images);
      if (!sc_labels.empty()) {
        const auto labels = mibench::read_idx_labels(sc_labels);
        if (static_cast<Eigen::Index>(labels.size()) != images.size()) {
          throw mibench::ConfigError("label count does not match image count");
        }
      }
      const auto points = mibench::run_selfconsistency(images, sc);
      mibench::write_selfconsistency_csv(sc_out, points);
      for (const auto& p : points) {
        std::cout << fmt::format("t={:>2} independence={:.3f} (raw {:.3f}) processing={:.3f} additivity={:.3f}\n", p.t,
                                 p.independence_normalized, p.independence_raw, p.data_processing_ratio,
                                 p.additivity_ratio);
      }
      return kOk;
    }
    if (gc_cmd->parsed()) {
      bool ok = true;
      for (const auto& e : mibench::run_gradient_suite(trials, tolerance, gc_seed)) {
        std::cout << fmt::format("{:<18} trials={} checked={} skipped={} max_rel_err={:.3e} {}\n", e.loss, e.trials,
                                 e.coordinates_checked, e.coordinates_skipped, e.max_relative_error,
                                 e.passed ? "PASS" : "FAIL");
        ok = ok && e.passed;
      }
      return ok ? kOk : kRunFailure;
    }
    if (or_cmd->parsed()) {
      const mibench::GaussianTask task{or_dim, mibench::rho_for_mi(or_dim, or_mi), or_cubic};
      const auto pool = mibench::sample_pool(task, or_n, or_seed);
      const auto est = mibench::sample_average_mi(task, pool);
      std::cout << fmt::format("true_mi={} estimate={} standard_error={}\n", mibench::true_mi(task), est.mean,
                               est.standard_error);
      return kOk;
    }
  } catch (const mibench::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const mibench::FormatError& e) {
    std::cerr << "input format error: " << e.what() << '\n';
    return kIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::domain_error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << '\n';
    return kRunFailure;
  }
  return kOk;
}
