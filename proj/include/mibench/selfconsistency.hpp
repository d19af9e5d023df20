#ifndef MIBENCH_SELFCONSISTENCY_HPP
#define MIBENCH_SELFCONSISTENCY_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mibench/idx.hpp"

namespace mibench {

// Keeps the top t rows of every image and zeroes the rest.
ImageSet mask_rows(const ImageSet& images, int t);
// 2x2 average pooling (odd trailing rows/columns are dropped).
ImageSet downsample2(const ImageSet& images);

struct SelfConsistencyConfig {
  int rows_step = 4;
  std::uint64_t seed = 0;
  int epochs = 5;
  Eigen::Index batch_size = 64;
  double learning_rate = 5e-4;
  std::vector<int> hidden_dims{512, 512};
  double alpha = 0.5;
  // Held-out images used for estimation, capped at a sixth of the set.
  Eigen::Index eval_size = 10000;
};

struct SelfConsistencyPoint {
  int t = 0;
  // I(X; h(X; t)), raw and divided by its value at t = rows.
  double independence_raw = 0.0;
  double independence_normalized = 0.0;
  // I([X, X]; [h(X; t), h(X; t - 3)]) / I(X; h(X; t)); NaN for t < 3.
  double data_processing_ratio = 0.0;
  // I([X1, X2]; [h(X1; t), h(X2; t)]) / I(X1; h(X1; t)).
  double additivity_ratio = 0.0;
};

// Evaluates t = 0, rows_step, 2 rows_step, ... and always the full height.
// Masking happens at full resolution, then images are 2x2 downsampled and
// fed to DEMI classifiers with dense hidden layers.
std::vector<SelfConsistencyPoint> run_selfconsistency(const ImageSet& images,
                                                      const SelfConsistencyConfig& config);

// Columns: t,independence_raw,independence_normalized,data_processing_ratio,additivity_ratio.
void write_selfconsistency_csv(const std::filesystem::path& path,
                               const std::vector<SelfConsistencyPoint>& points);

}  // namespace mibench

#endif  // MIBENCH_SELFCONSISTENCY_HPP
