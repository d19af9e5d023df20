#include "mibench/lifting.hpp"

#include "mibench/errors.hpp"

namespace mibench {

namespace {

void check_lifting_args(const SamplePool& pool, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie strictly inside (0, 1)");
  if (pool.size() < 2) throw DomainError("unpaired draws need a pool of at least 2 pairs");
}

LiftedBatch empty_batch(const SamplePool& pool, Eigen::Index m, double alpha) {
  LiftedBatch b;
  b.xs.resize(pool.x_dim(), m);
  b.ys.resize(pool.y_dim(), m);
  b.zs.resize(static_cast<std::size_t>(m));
  b.x_index.resize(static_cast<std::size_t>(m));
  b.y_index.resize(static_cast<std::size_t>(m));
  b.alpha = alpha;
  return b;
}

void fill_row(LiftedBatch& b, const SamplePool& pool, Eigen::Index row, bool z, Eigen::Index ix,
              Eigen::Index iy) {
  const auto r = static_cast<std::size_t>(row);
  b.zs[r] = z ? 1 : 0;
  b.x_index[r] = ix;
  b.y_index[r] = iy;
  b.xs.col(row) = pool.xs.col(ix);
  b.ys.col(row) = pool.ys.col(iy);
}

}  // namespace

Eigen::VectorXd LiftedBatch::labels() const {
  Eigen::VectorXd z(size());
  for (Eigen::Index i = 0; i < size(); ++i) z(i) = zs[static_cast<std::size_t>(i)];
  return z;
}

LiftedBatch draw_lifted(const SamplePool& pool, Eigen::Index m, double alpha, std::uint64_t seed) {
  check_lifting_args(pool, alpha);
  if (m < 0) throw DomainError("batch size must be nonnegative");
  LiftedBatch b = empty_batch(pool, m, alpha);
  Rng rng(derive_seed(seed, "draw_lifted"));
  const auto n = static_cast<std::uint64_t>(pool.size());
  for (Eigen::Index row = 0; row < m; ++row) {
    if (rng.bernoulli(alpha)) {
      const auto i = static_cast<Eigen::Index>(rng.index(n));
      fill_row(b, pool, row, true, i, i);
    } else {
      const auto ix = static_cast<Eigen::Index>(rng.index(n));
      const auto iy = static_cast<Eigen::Index>(rng.index(n));
      fill_row(b, pool, row, false, ix, iy);
    }
  }
  return b;
}

EpochStream::EpochStream(const SamplePool& pool, double alpha, Eigen::Index batch_size,
                         std::uint64_t seed)
    : pool_(&pool), alpha_(alpha), batch_size_(batch_size), rng_(derive_seed(seed, "epoch_stream")) {
  check_lifting_args(pool, alpha);
  if (batch_size < 2) throw DomainError("batch size must be at least 2");
  batches_per_epoch_ = (pool.size() + batch_size - 1) / batch_size;
}

void EpochStream::start_epoch() {
  permutation_ = rng_.permutation(static_cast<std::size_t>(pool_->size()));
  cursor_ = 0;
  batch_in_epoch_ = 0;
  ++epoch_;
}

Eigen::Index EpochStream::next_joint_index() {
  if (cursor_ == permutation_.size()) {
    permutation_ = rng_.permutation(static_cast<std::size_t>(pool_->size()));
    cursor_ = 0;
  }
  return static_cast<Eigen::Index>(permutation_[cursor_++]);
}

LiftedBatch EpochStream::next() {
  if (epoch_ == 0 || batch_in_epoch_ == batches_per_epoch_) start_epoch();
  const Eigen::Index n = pool_->size();
  const Eigen::Index m = std::min(batch_size_, n - batch_in_epoch_ * batch_size_);
  LiftedBatch b = empty_batch(*pool_, m, alpha_);
  for (Eigen::Index row = 0; row < m; ++row) {
    if (rng_.bernoulli(alpha_)) {
      const Eigen::Index i = next_joint_index();
      fill_row(b, *pool_, row, true, i, i);
    } else {
      const auto ix = static_cast<Eigen::Index>(rng_.index(static_cast<std::uint64_t>(n)));
      const auto iy = static_cast<Eigen::Index>(rng_.index(static_cast<std::uint64_t>(n)));
      fill_row(b, *pool_, row, false, ix, iy);
    }
  }
  ++batch_in_epoch_;
  return b;
}

std::vector<LiftedBatch> EpochStream::next_epoch() {
  if (epoch_ != 0 && batch_in_epoch_ != batches_per_epoch_) {
    throw ContractError("next_epoch called in the middle of an epoch");
  }
  std::vector<LiftedBatch> out;
  out.reserve(static_cast<std::size_t>(batches_per_epoch_));
  for (Eigen::Index b = 0; b < batches_per_epoch_; ++b) out.push_back(next());
  return out;
}

}  // namespace mibench
