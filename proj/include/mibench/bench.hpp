#ifndef MIBENCH_BENCH_HPP
#define MIBENCH_BENCH_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mibench/estimators.hpp"

namespace mibench {

// Cartesian product of task settings x estimators x seeds.
struct ExperimentGrid {
  std::vector<int> dims{20};
  std::vector<double> mi_targets{0.1, 5.0, 10.0};
  std::vector<Eigen::Index> train_sizes{32000};
  std::vector<bool> cubic{false};
  // The seed field of each spec is ignored; run seeds are derived.
  std::vector<EstimatorSpec> estimators;
  int n_seeds = 3;
  Eigen::Index eval_size = 10240;
  std::uint64_t base_seed = 0;
  // When false, wall_time_s is reported as 0 so reports are byte-identical
  // across reruns.
  bool record_wall_time = true;

  std::size_t run_count() const;
};

struct GridCell {
  int dim = 20;
  double mi_target = 0.0;
  Eigen::Index train_size = 0;
  bool cubic = false;

  std::string key() const;
};

// Seed derivation. Data seeds depend only on (cell, seed index), so every
// estimator in a cell sees the same train and eval pools:
//   data  = derive_seed(base, "data|" + cell.key() + "|seed=" + index)
//   train = derive_seed(data, "train"), eval = derive_seed(data, "eval")
//   model = derive_seed(base, "model|" + cell.key() + "|" + tag + "|seed=" + index)
std::uint64_t data_seed(std::uint64_t base_seed, const GridCell& cell, int seed_index);
std::uint64_t model_seed(std::uint64_t base_seed, const GridCell& cell, const std::string& tag,
                         int seed_index);

struct ResultRow {
  int dim = 0;
  double mi_target = 0.0;
  Eigen::Index train_size = 0;
  bool cubic = false;
  std::string estimator;
  int seed = 0;
  double estimate = 0.0;
  double error = 0.0;  // mi_target - estimate
  double wall_time_s = 0.0;
  // ok | diverged | unstable | failed
  std::string status = "ok";

  bool operator==(const ResultRow&) const = default;
};

// Aggregate over the ok rows of one (cell, estimator).
struct CellSummary {
  GridCell cell;
  std::string estimator;
  int n_ok = 0;
  int n_failed = 0;
  double mean_estimate = 0.0;
  double mean_error = 0.0;
  // Sample standard deviation (n - 1) of the estimates; 0 for one run.
  double std_estimate = 0.0;
};

// One full run: sample pools, train, estimate. Failures are captured in
// the row's status.
ResultRow run_single(const ExperimentGrid& grid, const GridCell& cell, const EstimatorSpec& spec,
                     int seed_index);

// Rows in canonical key order; values independent of `parallelism`.
std::vector<ResultRow> run_grid(const ExperimentGrid& grid, int parallelism);

std::vector<CellSummary> summarize(const std::vector<ResultRow>& rows);
std::string format_summary(const std::vector<CellSummary>& summary);

void sort_rows(std::vector<ResultRow>& rows);

enum class ReportFormat { kCsv, kJson };

inline constexpr const char* kReportHeader =
    "dim,mi_target,train_size,cubic,estimator,seed,estimate,error,wall_time_s,status";

std::string report_csv(std::vector<ResultRow> rows);
nlohmann::json report_json(std::vector<ResultRow> rows);
void emit_report(const std::vector<ResultRow>& rows, ReportFormat format,
                 const std::filesystem::path& path);
std::vector<ResultRow> parse_report_csv(const std::string& text);
std::vector<ResultRow> read_report_csv(const std::filesystem::path& path);
std::vector<ResultRow> rows_from_json(const nlohmann::json& j);

// Grid config. Fields mirror ExperimentGrid; estimators are tags
// ("demi(0.5)", "smile(inf)", ...) or objects {"tag": ..., overrides}.
// Shared training fields: epochs, batch_size, learning_rate, hidden_dims,
// eval_batch.
ExperimentGrid grid_from_json(const nlohmann::json& j);
ExperimentGrid read_grid_config(const std::filesystem::path& path);

}  // namespace mibench

#endif  // MIBENCH_BENCH_HPP
