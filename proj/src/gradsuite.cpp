#include "mibench/gradsuite.hpp"

#include <algorithm>
#include <optional>

#include <fmt/format.h>

#include "mibench/estimators.hpp"
#include "mibench/numeric.hpp"
#include "mibench/rng.hpp"
#include "mibench/synth.hpp"

namespace mibench {

namespace {

constexpr Eigen::Index kBatch = 8;

Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

DenseNet random_net(int input, OutputMode mode, Rng& rng) {
  const int h1 = 3 + static_cast<int>(rng.index(8));
  const int h2 = 3 + static_cast<int>(rng.index(8));
  DenseNet net = init_net({input, h1, h2, 1}, mode, rng.next_u64());
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    Eigen::VectorXd& b = net.mutable_bias(l);
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = 0.1 * rng.normal();
  }
  return net;
}

// Joint pairs followed by the pairs (x_j, y_perm[j]).
Eigen::MatrixXd critic_inputs(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys,
                              const std::vector<std::size_t>& perm) {
  Eigen::MatrixXd shuffled(ys.rows(), ys.cols());
  for (Eigen::Index j = 0; j < ys.cols(); ++j) shuffled.col(j) = ys.col(static_cast<Eigen::Index>(perm[j]));
  Eigen::MatrixXd in(xs.rows() + ys.rows(), 2 * xs.cols());
  in << stack_inputs(xs, ys), stack_inputs(xs, shuffled);
  return in;
}

}  // namespace

std::vector<GradSuiteEntry> run_gradient_suite(int trials, double tolerance, std::uint64_t seed) {
  const std::vector<std::string> losses{"cross_entropy", "dv", "smile(1)", "smile(1) clipped", "infonce"};
  std::vector<GradSuiteEntry> out;
  for (const std::string& name : losses) {
    GradSuiteEntry entry;
    entry.loss = name;
    entry.passed = true;
    Rng rng(derive_seed(seed, "gradsuite|" + name));
    for (int trial = 0; trial < trials; ++trial) {
      const int dx = 1 + static_cast<int>(rng.index(4));
      const int dy = 1 + static_cast<int>(rng.index(4));
      const Eigen::MatrixXd xs = normal_matrix(dx, kBatch, rng);
      const Eigen::MatrixXd ys = normal_matrix(dy, kBatch, rng);
      LossEvaluator value;
      GradientEvaluator grad;
      std::optional<DenseNet> net;
      if (name == "cross_entropy") {
        net = random_net(dx + dy, OutputMode::kLogistic, rng);
        LiftedBatch batch;
        batch.xs = xs;
        batch.ys = ys;
        batch.alpha = 0.5;
        for (Eigen::Index i = 0; i < kBatch; ++i) batch.zs.push_back(rng.bernoulli(0.5) ? 1 : 0);
        batch.x_index.assign(kBatch, 0);
        batch.y_index.assign(kBatch, 0);
        value = [batch](const DenseNet& n) { return classifier_batch_loss(n, batch, Demi{0.5}).loss; };
        grad = [batch](const DenseNet& n) { return classifier_batch_loss(n, batch, Demi{0.5}).gradients; };
      } else if (name == "infonce") {
        net = random_net(dx + dy, OutputMode::kLinear, rng);
        value = [xs, ys](const DenseNet& n) { return infonce_batch_loss(n, xs, ys).loss; };
        grad = [xs, ys](const DenseNet& n) { return infonce_batch_loss(n, xs, ys).gradients; };
      } else if (name == "smile(1) clipped") {
        net = random_net(dx + dy, OutputMode::kLinear, rng);
        const std::vector<std::size_t> perm = rng.permutation(kBatch);
        const Eigen::MatrixXd in = critic_inputs(xs, ys, perm);
        value = [in](const DenseNet& n) {
          const Eigen::VectorXd s = raw_scores(n, in);
          return smile_objective(s.head(kBatch), s.tail(kBatch), 1.0).value;
        };
        grad = [in](const DenseNet& n) {
          const ForwardPass fp = forward(n, in);
          const CriticObjective o = smile_objective(fp.raw_scores.head(kBatch), fp.raw_scores.tail(kBatch), 1.0);
          Eigen::VectorXd g(2 * kBatch);
          g << o.joint_gradient, o.marginal_gradient;
          return backward(n, fp.cache, g);
        };
      } else {
        net = random_net(dx + dy, OutputMode::kLinear, rng);
        const double tau = name == "dv" ? kInf : 1.0;
        const std::vector<std::size_t> perm = rng.permutation(kBatch);
        value = [xs, ys, perm, tau](const DenseNet& n) { return critic_batch_loss(n, xs, ys, perm, tau).loss; };
        grad = [xs, ys, perm, tau](const DenseNet& n) {
          return critic_batch_loss(n, xs, ys, perm, tau).gradients;
        };
      }
      const GradCheckReport report = grad_check(*net, value, grad, tolerance, rng.next_u64());
      entry.max_relative_error = std::max(entry.max_relative_error, report.max_relative_error);
      entry.passed = entry.passed && report.passed;
      entry.coordinates_checked += report.coordinates_checked;
      entry.coordinates_skipped += report.coordinates_skipped;
      ++entry.trials;
    }
    out.push_back(entry);
  }
  return out;
}

}  // namespace mibench
