#ifndef MIBENCH_LONGRUN_HPP
#define MIBENCH_LONGRUN_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mibench/estimators.hpp"

namespace mibench {

// Streaming training study: every step draws a fresh batch from the
// Gaussian generator, so there is no finite training pool.
struct LongRunConfig {
  int dim = 20;
  double mi = 10.0;
  bool cubic = false;
  std::int64_t steps = 20000;
  Eigen::Index batch_size = 64;
  std::vector<EstimatorVariant> estimators;
  std::uint64_t seed = 0;
  std::int64_t record_every = 100;
  // Exponential smoothing factor f: smoothed = f * smoothed + (1 - f) * estimate.
  double smoothing = 0.99;
  double learning_rate = 5e-4;
  std::vector<int> hidden_dims{256, 256};
};

struct TracePoint {
  std::string estimator;
  std::int64_t step = 0;
  // Training-batch estimate at this step; NaN when the step diverged.
  double estimate = 0.0;
  double smoothed = 0.0;
};

// Per-step estimates come from the batch the step trains on. A step whose
// loss or gradient is non-finite is recorded as NaN and the run continues
// with the same network. All estimators see the same data stream.
std::vector<TracePoint> run_longrun(const LongRunConfig& config);

// Columns: estimator,step,estimate,smoothed.
void write_trace_csv(const std::filesystem::path& path, const std::vector<TracePoint>& trace);

}  // namespace mibench

#endif  // MIBENCH_LONGRUN_HPP
