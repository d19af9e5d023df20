#include "mibench/oracle.hpp"

#include <cmath>
#include <vector>

#include "mibench/errors.hpp"
#include "mibench/rng.hpp"

namespace mibench {

MeanAndError sample_average_mi(const GaussianTask& task, const SamplePool& eval_pairs) {
  const Eigen::VectorXd r = analytic_log_ratios(task, eval_pairs.xs, eval_pairs.ys);
  return mean_and_standard_error(std::span<const double>(r.data(), static_cast<std::size_t>(r.size())));
}

double optimal_posterior_score(const OptimalPosterior& p, const Eigen::Ref<const Eigen::VectorXd>& x,
                               const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (!(p.alpha > 0.0 && p.alpha < 1.0)) throw DomainError("alpha must lie strictly inside (0, 1)");
  return analytic_log_ratio(p.task, x, y) + logit(p.alpha);
}

Eigen::VectorXd optimal_posterior_scores(const OptimalPosterior& p, const Eigen::MatrixXd& xs,
                                         const Eigen::MatrixXd& ys) {
  if (xs.cols() != ys.cols()) throw ShapeError("x and y pair counts differ");
  Eigen::VectorXd out(xs.cols());
  for (Eigen::Index j = 0; j < xs.cols(); ++j) out(j) = optimal_posterior_score(p, xs.col(j), ys.col(j));
  return out;
}

MeanAndError bayes_optimal_ce_loss(const GaussianTask& task, double alpha, Eigen::Index n_mc,
                                   std::uint64_t seed) {
  if (n_mc < 1) throw DomainError("n_mc must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie strictly inside (0, 1)");
  const OptimalPosterior post{task, alpha};
  const SamplePool joint = sample_pool(task, n_mc, derive_seed(seed, "ce_joint"));
  // Product-of-marginals draws: x from one joint draw, y from an independent one.
  const SamplePool other = sample_pool(task, n_mc, derive_seed(seed, "ce_product"));
  const Eigen::VectorXd t_joint = optimal_posterior_scores(post, joint.xs, joint.ys);
  const Eigen::VectorXd t_product = optimal_posterior_scores(post, joint.xs, other.ys);
  std::vector<double> terms(static_cast<std::size_t>(n_mc));
  for (Eigen::Index i = 0; i < n_mc; ++i) {
    terms[static_cast<std::size_t>(i)] =
        alpha * softplus(-t_joint(i)) + (1.0 - alpha) * softplus(t_product(i));
  }
  return mean_and_standard_error(terms);
}

}  // namespace mibench
