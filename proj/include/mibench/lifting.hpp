#ifndef MIBENCH_LIFTING_HPP
#define MIBENCH_LIFTING_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mibench/rng.hpp"
#include "mibench/synth.hpp"

namespace mibench {

// Rows drawn from the lifted distribution over (x, y, z): z ~ Bernoulli(alpha);
// z = 1 rows are pool pairs, z = 0 rows combine an x and a y taken from
// independently chosen pool entries. Columns follow the SamplePool layout.
struct LiftedBatch {
  Eigen::MatrixXd xs;
  Eigen::MatrixXd ys;
  std::vector<std::uint8_t> zs;
  // Source pool column of each row's x and y (equal for z = 1 rows).
  std::vector<Eigen::Index> x_index;
  std::vector<Eigen::Index> y_index;
  double alpha = 0.5;

  Eigen::Index size() const { return static_cast<Eigen::Index>(zs.size()); }
  Eigen::VectorXd labels() const;
};

// m independent lifted rows, indices drawn uniformly with replacement.
LiftedBatch draw_lifted(const SamplePool& pool, Eigen::Index m, double alpha, std::uint64_t seed);

// Epoch-structured lifted sampler. An epoch is ceil(n / batch_size)
// batches (the last one holds the remainder). z is drawn per row; joint rows
// walk a per-epoch permutation of the pool so no pair is used twice as a
// joint example within an epoch (if an unusually large number of z = 1 draws
// exhausts the permutation, a fresh one is started); unpaired rows draw two
// independent uniform indices.
//
// The stream references `pool`, which must outlive it.
class EpochStream {
 public:
  EpochStream(const SamplePool& pool, double alpha, Eigen::Index batch_size, std::uint64_t seed);

  Eigen::Index batches_per_epoch() const { return batches_per_epoch_; }
  // Number of epochs begun so far.
  std::int64_t epoch() const { return epoch_; }
  // Index of the next batch within the current epoch.
  Eigen::Index batch_in_epoch() const { return batch_in_epoch_ == batches_per_epoch_ ? 0 : batch_in_epoch_; }

  LiftedBatch next();
  std::vector<LiftedBatch> next_epoch();

 private:
  void start_epoch();
  Eigen::Index next_joint_index();

  const SamplePool* pool_;
  double alpha_;
  Eigen::Index batch_size_;
  Eigen::Index batches_per_epoch_;
  Rng rng_;
  std::vector<std::size_t> permutation_;
  std::size_t cursor_ = 0;
  std::int64_t epoch_ = 0;
  Eigen::Index batch_in_epoch_ = 0;
};

}  // namespace mibench

#endif  // MIBENCH_LIFTING_HPP
