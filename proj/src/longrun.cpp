#include "mibench/longrun.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "mibench/errors.hpp"
#include "mibench/synth.hpp"

namespace mibench {

namespace {

// Lifted batch from fresh generator draws: z = 1 rows use pair j of `fresh`,
// z = 0 rows combine x_j with the y of the independent pair batch + j.
LiftedBatch fresh_lifted(const SamplePool& fresh, Eigen::Index batch, double alpha, Rng& rng) {
  LiftedBatch b;
  b.alpha = alpha;
  b.xs = fresh.xs.leftCols(batch);
  b.ys.resize(fresh.y_dim(), batch);
  for (Eigen::Index j = 0; j < batch; ++j) {
    const bool z = rng.bernoulli(alpha);
    const Eigen::Index iy = z ? j : batch + j;
    b.ys.col(j) = fresh.ys.col(iy);
    b.zs.push_back(z ? 1 : 0);
    b.x_index.push_back(j);
    b.y_index.push_back(iy);
  }
  return b;
}

}  // namespace

std::vector<TracePoint> run_longrun(const LongRunConfig& config) {
  if (config.steps < 0) throw ConfigError("steps must be nonnegative");
  if (config.batch_size < 2) throw ConfigError("batch size must be at least 2");
  if (config.record_every < 1) throw ConfigError("record interval must be at least 1");
  if (!(config.smoothing >= 0.0 && config.smoothing < 1.0)) throw ConfigError("smoothing must lie in [0, 1)");
  const GaussianTask task{config.dim, rho_for_mi(config.dim, config.mi), config.cubic};
  const std::uint64_t data = derive_seed(config.seed, "longrun_data");

  std::vector<TracePoint> trace;
  for (const EstimatorVariant& variant : config.estimators) {
    const std::string tag = estimator_tag(variant);
    EstimatorSpec spec;
    spec.variant = variant;
    spec.batch_size = config.batch_size;
    spec.learning_rate = config.learning_rate;
    spec.hidden_dims = config.hidden_dims;
    spec.seed = derive_seed(config.seed, "longrun_model|" + tag);
    Trainer trainer(spec, config.dim, config.dim);
    Rng rng(derive_seed(spec.seed, "longrun_steps"));
    const bool classifier = is_classifier(variant);

    double smoothed = std::numeric_limits<double>::quiet_NaN();
    for (std::int64_t step = 1; step <= config.steps; ++step) {
      const Eigen::Index draw = classifier ? 2 * config.batch_size : config.batch_size;
      const SamplePool fresh = sample_pool(task, draw, derive_seed(data, fmt::format("step={}", step)));
      double value = std::numeric_limits<double>::quiet_NaN();
      try {
        const StepResult r = classifier
                                 ? trainer.step(fresh_lifted(fresh, config.batch_size, lifting_alpha(variant), rng))
                                 : trainer.step(fresh.xs, fresh.ys, rng);
        value = r.estimate;
      } catch (const DivergenceError&) {
      }
      if (std::isfinite(value)) {
        smoothed = std::isnan(smoothed) ? value : config.smoothing * smoothed + (1.0 - config.smoothing) * value;
      }
      if (step % config.record_every == 0) trace.push_back({tag, step, value, smoothed});
    }
  }
  return trace;
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TracePoint>& trace) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open trace file for writing", path.string());
  os << "estimator,step,estimate,smoothed\n";
  for (const TracePoint& p : trace) {
    os << fmt::format("{},{},{},{}\n", p.estimator, p.step, p.estimate, p.smoothed);
  }
  if (!os) throw IoError("failed writing trace file", path.string());
}

}  // namespace mibench
