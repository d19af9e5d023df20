#include "mibench/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <fmt/format.h>

#include "mibench/errors.hpp"
#include "mibench/rng.hpp"
#include "mibench/synth.hpp"

namespace mibench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

double parse_real(const std::string& s) {
  if (s == "nan") return kNaN;
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw ConfigError("bad number '" + s + "' in report");
  return v;
}

auto row_key(const ResultRow& r) {
  return std::tie(r.dim, r.mi_target, r.train_size, r.cubic, r.estimator, r.seed);
}

struct RunItem {
  GridCell cell;
  const EstimatorSpec* spec;
  int seed_index;
};

std::vector<RunItem> enumerate_runs(const ExperimentGrid& grid) {
  std::vector<RunItem> runs;
  for (int d : grid.dims)
    for (double mi : grid.mi_targets)
      for (Eigen::Index n : grid.train_sizes)
        for (bool c : grid.cubic)
          for (const EstimatorSpec& spec : grid.estimators)
            for (int s = 0; s < grid.n_seeds; ++s) runs.push_back({GridCell{d, mi, n, c}, &spec, s});
  return runs;
}

void validate(const ExperimentGrid& grid) {
  if (grid.dims.empty() || grid.mi_targets.empty() || grid.train_sizes.empty() || grid.cubic.empty() ||
      grid.estimators.empty()) {
    throw ConfigError("every grid axis needs at least one value");
  }
  if (grid.n_seeds < 1) throw ConfigError("n_seeds must be at least 1");
  if (grid.eval_size < 2) throw ConfigError("eval_size must be at least 2");
  for (int d : grid.dims) {
    if (d < 1) throw ConfigError("dims must be positive");
  }
  for (double mi : grid.mi_targets) {
    if (!(mi >= 0.0) || !std::isfinite(mi)) throw ConfigError("mi_targets must be finite and nonnegative");
  }
  for (Eigen::Index n : grid.train_sizes) {
    if (n < 2) throw ConfigError("train sizes must be at least 2");
  }
  std::set<std::string> tags;
  for (const EstimatorSpec& s : grid.estimators) {
    if (!tags.insert(estimator_tag(s.variant)).second) {
      throw ConfigError("duplicate estimator tag " + estimator_tag(s.variant));
    }
  }
}

}  // namespace

std::size_t ExperimentGrid::run_count() const {
  return dims.size() * mi_targets.size() * train_sizes.size() * cubic.size() * estimators.size() *
         static_cast<std::size_t>(std::max(n_seeds, 0));
}

std::string GridCell::key() const {
  return fmt::format("d={}|mi={}|n={}|cubic={}", dim, fmt_real(mi_target), train_size, cubic ? 1 : 0);
}

std::uint64_t data_seed(std::uint64_t base_seed, const GridCell& cell, int seed_index) {
  return derive_seed(base_seed, fmt::format("data|{}|seed={}", cell.key(), seed_index));
}

std::uint64_t model_seed(std::uint64_t base_seed, const GridCell& cell, const std::string& tag,
                         int seed_index) {
  return derive_seed(base_seed, fmt::format("model|{}|{}|seed={}", cell.key(), tag, seed_index));
}

ResultRow run_single(const ExperimentGrid& grid, const GridCell& cell, const EstimatorSpec& spec,
                     int seed_index) {
  ResultRow row;
  row.dim = cell.dim;
  row.mi_target = cell.mi_target;
  row.train_size = cell.train_size;
  row.cubic = cell.cubic;
  row.estimator = estimator_tag(spec.variant);
  row.seed = seed_index;

  const auto start = std::chrono::steady_clock::now();
  try {
    const GaussianTask task{cell.dim, rho_for_mi(cell.dim, cell.mi_target), cell.cubic};
    const std::uint64_t data = data_seed(grid.base_seed, cell, seed_index);
    const SamplePool train_pool = sample_pool(task, cell.train_size, derive_seed(data, "train"));
    const SamplePool eval_pool = sample_pool(task, grid.eval_size, derive_seed(data, "eval"));
    EstimatorSpec run_spec = spec;
    run_spec.seed = model_seed(grid.base_seed, cell, row.estimator, seed_index);
    const TrainedModel model = train(run_spec, train_pool);
    row.estimate = estimate(run_spec, model.net, eval_pool).estimate;
    row.error = cell.mi_target - row.estimate;
  } catch (const DivergenceError&) {
    row.status = "diverged";
  } catch (const EstimateUnstableError&) {
    row.status = "unstable";
  } catch (const std::exception&) {
    row.status = "failed";
  }
  if (row.status != "ok") {
    row.estimate = kNaN;
    row.error = kNaN;
  }
  if (grid.record_wall_time) {
    row.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return row;
}

std::vector<ResultRow> run_grid(const ExperimentGrid& grid, int parallelism) {
  validate(grid);
  const std::vector<RunItem> runs = enumerate_runs(grid);
  std::vector<ResultRow> rows(runs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < runs.size(); i = next.fetch_add(1)) {
      rows[i] = run_single(grid, runs[i].cell, *runs[i].spec, runs[i].seed_index);
    }
  };
  const int workers = std::clamp(parallelism, 1, static_cast<int>(std::max<std::size_t>(runs.size(), 1)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  sort_rows(rows);
  return rows;
}

void sort_rows(std::vector<ResultRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ResultRow& a, const ResultRow& b) { return row_key(a) < row_key(b); });
}

std::vector<CellSummary> summarize(const std::vector<ResultRow>& rows) {
  std::map<std::tuple<int, double, Eigen::Index, bool, std::string>, std::vector<const ResultRow*>> groups;
  for (const ResultRow& r : rows) groups[{r.dim, r.mi_target, r.train_size, r.cubic, r.estimator}].push_back(&r);
  std::vector<CellSummary> out;
  for (const auto& [key, members] : groups) {
    CellSummary s;
    s.cell = GridCell{std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key)};
    s.estimator = std::get<4>(key);
    std::vector<double> estimates;
    for (const ResultRow* r : members) {
      if (r->status == "ok") {
        estimates.push_back(r->estimate);
      } else {
        ++s.n_failed;
      }
    }
    s.n_ok = static_cast<int>(estimates.size());
    if (s.n_ok > 0) {
      double sum = 0.0;
      for (double e : estimates) sum += e;
      s.mean_estimate = sum / s.n_ok;
      s.mean_error = s.cell.mi_target - s.mean_estimate;
      if (s.n_ok > 1) {
        double ss = 0.0;
        for (double e : estimates) ss += (e - s.mean_estimate) * (e - s.mean_estimate);
        s.std_estimate = std::sqrt(ss / (s.n_ok - 1));
      }
    } else {
      s.mean_estimate = kNaN;
      s.mean_error = kNaN;
      s.std_estimate = kNaN;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string format_summary(const std::vector<CellSummary>& summary) {
  std::string out = fmt::format("{:>5} {:>8} {:>8} {:>6} {:<12} {:>16} {:>5}\n", "dim", "MI", "train",
                                "cubic", "estimator", "error +- std", "runs");
  for (const CellSummary& s : summary) {
    out += fmt::format("{:>5} {:>8} {:>8} {:>6} {:<12} {:>8.2f} +- {:<5.2f} {:>3}/{}\n", s.cell.dim,
                       fmt_real(s.cell.mi_target), s.cell.train_size, s.cell.cubic ? "yes" : "no",
                       s.estimator, s.mean_error, s.std_estimate, s.n_ok, s.n_ok + s.n_failed);
  }
  return out;
}

std::string report_csv(std::vector<ResultRow> rows) {
  sort_rows(rows);
  std::string out = kReportHeader;
  out += '\n';
  for (const ResultRow& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.dim, fmt_real(r.mi_target), r.train_size,
                       r.cubic ? "true" : "false", r.estimator, r.seed, fmt_real(r.estimate),
                       fmt_real(r.error), fmt_real(r.wall_time_s), r.status);
  }
  return out;
}

nlohmann::json report_json(std::vector<ResultRow> rows) {
  sort_rows(rows);
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::json arr = nlohmann::json::array();
  for (const ResultRow& r : rows) {
    arr.push_back({{"dim", r.dim},
                   {"mi_target", num(r.mi_target)},
                   {"train_size", r.train_size},
                   {"cubic", r.cubic},
                   {"estimator", r.estimator},
                   {"seed", r.seed},
                   {"estimate", num(r.estimate)},
                   {"error", num(r.error)},
                   {"wall_time_s", num(r.wall_time_s)},
                   {"status", r.status}});
  }
  return arr;
}

void emit_report(const std::vector<ResultRow>& rows, ReportFormat format,
                 const std::filesystem::path& path) {
  if (rows.empty()) throw ConfigError("refusing to write an empty report");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open report for writing", path.string());
  if (format == ReportFormat::kCsv) {
    os << report_csv(rows);
  } else {
    os << report_json(rows).dump(2) << '\n';
  }
  if (!os) throw IoError("failed writing report", path.string());
}

std::vector<ResultRow> parse_report_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kReportHeader) {
    throw ConfigError("report CSV header does not match the expected columns");
  }
  std::vector<ResultRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 10) throw ConfigError("report CSV row has " + std::to_string(f.size()) + " fields");
    ResultRow r;
    r.dim = std::stoi(f[0]);
    r.mi_target = parse_real(f[1]);
    r.train_size = std::stoll(f[2]);
    if (f[3] != "true" && f[3] != "false") throw ConfigError("bad cubic field '" + f[3] + "'");
    r.cubic = f[3] == "true";
    r.estimator = f[4];
    r.seed = std::stoi(f[5]);
    r.estimate = parse_real(f[6]);
    r.error = parse_real(f[7]);
    r.wall_time_s = parse_real(f[8]);
    r.status = f[9];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ResultRow> read_report_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open report", path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_report_csv(ss.str());
}

std::vector<ResultRow> rows_from_json(const nlohmann::json& j) {
  auto num = [](const nlohmann::json& v) { return v.is_null() ? kNaN : v.get<double>(); };
  std::vector<ResultRow> rows;
  for (const auto& o : j) {
    ResultRow r;
    r.dim = o.at("dim").get<int>();
    r.mi_target = num(o.at("mi_target"));
    r.train_size = o.at("train_size").get<Eigen::Index>();
    r.cubic = o.at("cubic").get<bool>();
    r.estimator = o.at("estimator").get<std::string>();
    r.seed = o.at("seed").get<int>();
    r.estimate = num(o.at("estimate"));
    r.error = num(o.at("error"));
    r.wall_time_s = num(o.at("wall_time_s"));
    r.status = o.at("status").get<std::string>();
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

void apply_training_fields(const nlohmann::json& j, EstimatorSpec& spec) {
  if (j.contains("epochs")) spec.epochs = j.at("epochs").get<int>();
  if (j.contains("batch_size")) spec.batch_size = j.at("batch_size").get<Eigen::Index>();
  if (j.contains("learning_rate")) spec.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("hidden_dims")) spec.hidden_dims = j.at("hidden_dims").get<std::vector<int>>();
  if (j.contains("eval_batch")) spec.eval_batch = j.at("eval_batch").get<Eigen::Index>();
}

}  // namespace

ExperimentGrid grid_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw ConfigError("grid config must be a JSON object");
    static const std::set<std::string> known{
        "dims",      "mi_targets",  "train_sizes", "cubic",         "estimators",  "n_seeds",
        "eval_size", "base_seed",   "epochs",      "batch_size",    "learning_rate", "hidden_dims",
        "eval_batch", "record_wall_time"};
    for (const auto& [k, v] : j.items()) {
      if (!known.contains(k)) throw ConfigError("unknown grid config field '" + k + "'");
    }
    ExperimentGrid g;
    if (j.contains("dims")) g.dims = j.at("dims").get<std::vector<int>>();
    if (j.contains("mi_targets")) g.mi_targets = j.at("mi_targets").get<std::vector<double>>();
    if (j.contains("train_sizes")) g.train_sizes = j.at("train_sizes").get<std::vector<Eigen::Index>>();
    if (j.contains("cubic")) g.cubic = j.at("cubic").get<std::vector<bool>>();
    if (j.contains("n_seeds")) g.n_seeds = j.at("n_seeds").get<int>();
    if (j.contains("eval_size")) g.eval_size = j.at("eval_size").get<Eigen::Index>();
    if (j.contains("base_seed")) g.base_seed = j.at("base_seed").get<std::uint64_t>();
    if (j.contains("record_wall_time")) g.record_wall_time = j.at("record_wall_time").get<bool>();
    EstimatorSpec defaults;
    apply_training_fields(j, defaults);
    if (j.contains("estimators")) {
      for (const auto& e : j.at("estimators")) {
        EstimatorSpec spec = defaults;
        if (e.is_string()) {
          spec.variant = parse_estimator_tag(e.get<std::string>());
        } else {
          spec.variant = parse_estimator_tag(e.at("tag").get<std::string>());
          apply_training_fields(e, spec);
        }
        g.estimators.push_back(std::move(spec));
      }
    } else {
      defaults.variant = Demi{0.5};
      g.estimators.push_back(defaults);
    }
    validate(g);
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("grid config: ") + e.what());
  }
}

ExperimentGrid read_grid_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open grid config", path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("grid config is not valid JSON: ") + e.what());
  }
  return grid_from_json(j);
}

}  // namespace mibench
