#ifndef MIBENCH_ORACLE_HPP
#define MIBENCH_ORACLE_HPP

#include <cstdint>

#include <Eigen/Dense>

#include "mibench/numeric.hpp"
#include "mibench/synth.hpp"

namespace mibench {

// Plug-in sample average of the exact log density ratio over joint pairs.
MeanAndError sample_average_mi(const GaussianTask& task, const SamplePool& eval_pairs);

// Exact posterior p*(z = 1 | x, y) of the lifted distribution:
// sigmoid(log ratio + logit(alpha)).
struct OptimalPosterior {
  GaussianTask task;
  double alpha = 0.5;
};

// Raw score (logit) of the optimal posterior; interchangeable with a
// classifier network's raw score.
double optimal_posterior_score(const OptimalPosterior& p, const Eigen::Ref<const Eigen::VectorXd>& x,
                               const Eigen::Ref<const Eigen::VectorXd>& y);
Eigen::VectorXd optimal_posterior_scores(const OptimalPosterior& p, const Eigen::MatrixXd& xs,
                                         const Eigen::MatrixXd& ys);

// Minimal achievable cross-entropy under the lifted distribution, estimated
// as alpha * E_joint[softplus(-t)] + (1 - alpha) * E_product[softplus(t)]
// with t the optimal score, using n_mc fresh draws from each component.
MeanAndError bayes_optimal_ce_loss(const GaussianTask& task, double alpha, Eigen::Index n_mc,
                                   std::uint64_t seed);

}  // namespace mibench

#endif  // MIBENCH_ORACLE_HPP
