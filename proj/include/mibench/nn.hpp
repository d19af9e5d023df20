#ifndef MIBENCH_NN_HPP
#define MIBENCH_NN_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace mibench {

enum class OutputMode : std::uint8_t { kLinear = 0, kLogistic = 1 };

// Parameter-shaped container used for gradients and optimizer moments.
struct NetGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  std::size_t size() const;
  bool all_finite() const;
  double& flat(std::size_t i);
  double flat(std::size_t i) const;
  NetGradients& operator+=(const NetGradients& other);
};

// Fully connected ReLU network with a single scalar output.
//
// Samples are stored column-wise: a batch of m inputs is an
// (input_width x m) matrix. Layer l maps width dims[l] to dims[l+1] with
// weight(l) of shape dims[l+1] x dims[l]. Hidden layers apply ReLU; the
// final layer is affine and produces the raw score s. In logistic mode the
// network's probability output is sigmoid(s), but s itself is always
// retained so logit(q) == s holds exactly.
class DenseNet {
 public:
  DenseNet(std::vector<int> layer_dims, OutputMode mode);

  const std::vector<int>& layer_dims() const { return dims_; }
  OutputMode output_mode() const { return mode_; }
  int input_width() const { return dims_.front(); }
  std::size_t num_layers() const { return weights_.size(); }

  const Eigen::MatrixXd& weight(std::size_t l) const { return weights_[l]; }
  const Eigen::VectorXd& bias(std::size_t l) const { return biases_[l]; }
  // Mutable accessors invalidate outstanding forward caches.
  Eigen::MatrixXd& mutable_weight(std::size_t l);
  Eigen::VectorXd& mutable_bias(std::size_t l);

  std::size_t parameter_count() const;
  // Flat view: layer by layer, weight entries (storage order) then bias.
  double parameter(std::size_t i) const;
  void set_parameter(std::size_t i, double value);

  bool all_finite() const;
  NetGradients zeros_like() const;

  // Identifies the current parameter values; changes on every mutation.
  std::uint64_t version() const { return version_; }

  bool operator==(const DenseNet& other) const;

 private:
  void touch();

  std::vector<int> dims_;
  OutputMode mode_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
  std::uint64_t version_;
};

DenseNet init_net(const std::vector<int>& layer_dims, OutputMode mode, std::uint64_t seed);

struct ForwardCache {
  // activations[0] is the input; activations[l] the post-ReLU output of
  // hidden layer l.
  std::vector<Eigen::MatrixXd> activations;
  std::uint64_t net_version = 0;
  std::vector<int> layer_dims;
};

struct ForwardPass {
  Eigen::VectorXd raw_scores;
  // sigmoid(raw) in logistic mode, raw otherwise.
  Eigen::VectorXd outputs;
  ForwardCache cache;
};

ForwardPass forward(const DenseNet& net, const Eigen::MatrixXd& inputs);

// Inference only; returns raw scores without keeping activations.
Eigen::VectorXd raw_scores(const DenseNet& net, const Eigen::MatrixXd& inputs);

// Gradient of sum_i g_i * s_i with respect to every parameter, where s is
// the raw score and g the supplied per-sample output gradients.
NetGradients backward(const DenseNet& net, const ForwardCache& cache,
                      const Eigen::VectorXd& output_gradients);

struct AdamState {
  NetGradients first_moment;
  NetGradients second_moment;
  std::int64_t step_count = 0;
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamState make_adam(const DenseNet& net, double learning_rate);

// One bias-corrected Adam descent step, in place.
void adam_step(DenseNet& net, AdamState& state, const NetGradients& gradients);

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t coordinates_checked = 0;
  std::size_t coordinates_skipped = 0;
  std::size_t worst_coordinate = 0;
  bool passed = false;
};

using LossEvaluator = std::function<double(const DenseNet&)>;
using GradientEvaluator = std::function<NetGradients(const DenseNet&)>;

// Compares analytic gradients with central differences on a random subset
// of at least `min_coordinates` parameters (all of them if fewer exist).
// Relative error per coordinate is |a - n| / max(|a|, |n|, 1e-6).
// Each coordinate is probed at steps h and h/2. If the central differences
// or the curvature-scaled second differences of the two step sizes disagree
// beyond `tolerance` (relative, plus a roundoff allowance), the coordinate
// sits near a ReLU kink; it is counted in `coordinates_skipped` and left out.
// The check fails if more than half of the sampled coordinates are skipped.
GradCheckReport grad_check(const DenseNet& net, const LossEvaluator& loss,
                           const GradientEvaluator& gradient, double tolerance,
                           std::uint64_t seed = 0, std::size_t min_coordinates = 200,
                           double step = 1e-5);

}  // namespace mibench

#endif  // MIBENCH_NN_HPP
