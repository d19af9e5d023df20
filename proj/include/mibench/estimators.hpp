#ifndef MIBENCH_ESTIMATORS_HPP
#define MIBENCH_ESTIMATORS_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mibench/lifting.hpp"
#include "mibench/nn.hpp"
#include "mibench/rng.hpp"
#include "mibench/synth.hpp"

namespace mibench {

// Classifier trained on lifted data; estimate = mean logit - logit(alpha).
struct Demi {
  double alpha = 0.5;
};
// Donsker-Varadhan critic.
struct Mine {};
// DV critic whose partition-term tilting factor is clipped to [e^-tau, e^tau].
// Finite tau trains on the Jensen-Shannon surrogate (see critic_batch_loss);
// tau = +inf disables clipping and behaves exactly like Mine.
struct Smile {
  double tau = 1.0;
};
// Batch-softmax contrastive bound, capped at ln N.
struct InfoNce {};
// Classifier trained like Demi with alpha = 0.5, plus a partition correction
// on unpaired samples.
struct Ccmi {};

using EstimatorVariant = std::variant<Demi, Mine, Smile, InfoNce, Ccmi>;

struct EstimatorSpec {
  EstimatorVariant variant = Demi{};
  int epochs = 20;
  Eigen::Index batch_size = 64;
  double learning_rate = 5e-4;
  std::vector<int> hidden_dims{256, 256};
  std::uint64_t seed = 0;
  // InfoNCE evaluation block size; 0 means batch_size.
  Eigen::Index eval_batch = 0;
};

// Canonical tags: demi(0.5), mine, smile(1), smile(inf), infonce, ccmi.
std::string estimator_tag(const EstimatorVariant& variant);
// Accepts the canonical tags, plus "demi" for demi(0.5). Throws ConfigError.
EstimatorVariant parse_estimator_tag(std::string_view tag);

OutputMode output_mode_for(const EstimatorVariant& variant);
bool is_classifier(const EstimatorVariant& variant);
// Alpha used for lifting: Demi's alpha, 0.5 for Ccmi.
double lifting_alpha(const EstimatorVariant& variant);
std::vector<int> network_dims(const EstimatorSpec& spec, int x_dim, int y_dim);

// ---- Batch objectives ----------------------------------------------------

struct LossAndGradient {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

// Mean binary cross-entropy in raw-score form,
// mean(softplus(s) - z s), gradient (sigmoid(s) - z) / m.
LossAndGradient demi_loss(const Eigen::VectorXd& raw_scores, const Eigen::VectorXd& labels);

struct CriticObjective {
  double value = 0.0;
  // log mean of the (possibly clipped) tilting factor over marginal scores.
  double partition = 0.0;
  double clipped_fraction = 0.0;
  // d value / d score.
  Eigen::VectorXd joint_gradient;
  Eigen::VectorXd marginal_gradient;
};

// mean(joint) - log mean exp(marginal).
CriticObjective dv_objective(const Eigen::VectorXd& joint_scores,
                             const Eigen::VectorXd& marginal_scores);

// mean(joint) - log mean exp(clamp(marginal, -tau, tau)); tau = inf is dv_objective.
CriticObjective smile_objective(const Eigen::VectorXd& joint_scores,
                                const Eigen::VectorXd& marginal_scores, double tau);
double smile_estimate(const Eigen::VectorXd& joint_scores, const Eigen::VectorXd& marginal_scores,
                      double tau);
// Jensen-Shannon f-divergence bound, -mean(softplus(-joint)) - mean(softplus(marginal)).
// Finite-tau SMILE critics are trained on this surrogate; partition holds the
// marginal term.
CriticObjective js_objective(const Eigen::VectorXd& joint_scores, const Eigen::VectorXd& marginal_scores);

struct MatrixObjective {
  double value = 0.0;
  // mean over rows of log-sum-exp(row) - ln N.
  double partition = 0.0;
  Eigen::MatrixXd gradient;
};

// scores(i, j) = f(x_i, y_j). value = (1/N) sum_i [s_ii - lse_j s_ij + ln N] <= ln N.
MatrixObjective infonce_objective(const Eigen::MatrixXd& scores);

// ---- Estimates ------------------------------------------------------------

struct EstimateDiagnostics {
  // Mean raw score (logit for classifiers) on joint pairs.
  double mean_score = 0.0;
  // Quantity subtracted from mean_score: logit(alpha) for Demi, the log
  // partition term for Mine/Smile/Ccmi, mean row log-sum-exp - ln N for InfoNCE.
  double partition_term = 0.0;
  double clipped_fraction = 0.0;
  // Joint-pair raw scores with |s| > 50 (recorded, never clamped).
  Eigen::Index saturated_count = 0;
};

struct EstimateReport {
  double estimate = 0.0;
  Eigen::Index n_eval = 0;
  EstimateDiagnostics diagnostics;
};

inline constexpr double kSaturationLogit = 50.0;

EstimateReport demi_estimate_from_scores(const Eigen::VectorXd& raw_scores, double alpha);
EstimateReport demi_estimate(const DenseNet& classifier, const SamplePool& eval_pairs, double alpha);

// Throws EstimateUnstableError when a score or the result is non-finite.
EstimateReport ccmi_estimate_from_scores(const Eigen::VectorXd& joint_scores,
                                         const Eigen::VectorXd& unpaired_scores);
EstimateReport ccmi_estimate(const DenseNet& classifier, const SamplePool& joint_pairs,
                             const SamplePool& unpaired_pairs);

// Pool whose y columns are a seeded derangement of `pool`'s, representing p(x)p(y).
SamplePool shuffled_pairs(const SamplePool& pool, std::uint64_t seed);

// ---- Training -------------------------------------------------------------

// Loss of one training batch through a network, with parameter gradients.
struct BatchLoss {
  // Minimized quantity: cross-entropy, or the negated critic objective.
  double loss = 0.0;
  // Batch MI estimate (NaN when undefined, e.g. no z = 1 rows).
  double estimate = 0.0;
  NetGradients gradients;
};

// Cross-entropy on a lifted batch. The estimate is the mean z = 1 logit
// minus logit(alpha) for Demi; for Ccmi the log mean exp(-s) of the z = 0
// rows is subtracted instead.
BatchLoss classifier_batch_loss(const DenseNet& net, const LiftedBatch& batch,
                                const EstimatorVariant& variant);
// Critic training loss; marginal pairs are (x_j, y_perm[j]). With tau = inf
// (MINE) the loss is the negated DV objective. With finite tau the loss is
// the negated js_objective, since the clipped objective has no gradient on
// clipped scores and grows without bound; the estimate is still the clipped
// SMILE value.
BatchLoss critic_batch_loss(const DenseNet& net, const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys,
                            const std::vector<std::size_t>& y_perm, double tau);
// Negated InfoNCE objective over the n x n score matrix of the batch.
BatchLoss infonce_batch_loss(const DenseNet& net, const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys);

struct StepResult {
  // Quantity minimized by the step (cross-entropy, or the negated objective).
  double loss = 0.0;
  // Mutual information estimate on this batch (NaN when undefined, e.g. a
  // Demi batch without z = 1 rows).
  double estimate = 0.0;
};

// Owns a network and its optimizer; performs single training steps. Used by
// train() and by the long-run study, which streams fresh batches.
class Trainer {
 public:
  Trainer(const EstimatorSpec& spec, int x_dim, int y_dim);
  Trainer(const EstimatorSpec& spec, DenseNet net);

  // Classifier variants (Demi, Ccmi).
  StepResult step(const LiftedBatch& batch);
  // Critic variants (Mine, Smile, InfoNce) on a batch of joint pairs; Mine
  // and Smile pair each x with a within-batch shuffle of y drawn from `rng`.
  StepResult step(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys, Rng& rng);

  const DenseNet& net() const { return net_; }
  DenseNet release() { return std::move(net_); }
  std::int64_t steps() const { return adam_.step_count; }

 private:
  EstimatorSpec spec_;
  DenseNet net_;
  AdamState adam_;
};

struct TrainingLog {
  // Mean per-epoch training loss (Demi/Ccmi cross-entropy) or batch estimate
  // (Mine/Smile/InfoNce).
  std::vector<double> epoch_values;
  std::int64_t steps = 0;
};

struct TrainedModel {
  DenseNet net;
  TrainingLog log;
};

// Throws DivergenceError (message names epoch and batch) on a non-finite loss.
TrainedModel train(const EstimatorSpec& spec, const SamplePool& train_pool);

EstimateReport estimate(const EstimatorSpec& spec, const DenseNet& model, const SamplePool& eval_pool);

// Flat model layout, little-endian: uint64 number of layer widths, the widths
// as uint64, then per layer the row-major float64 weights followed by the
// float64 biases, then one output-mode byte (0 linear, 1 logistic).
void save_model(const std::filesystem::path& path, const DenseNet& net);
DenseNet load_model(const std::filesystem::path& path);

}  // namespace mibench

#endif  // MIBENCH_ESTIMATORS_HPP
