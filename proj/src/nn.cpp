#include "mibench/nn.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>

#include "mibench/errors.hpp"
#include "mibench/numeric.hpp"
#include "mibench/rng.hpp"

namespace mibench {

namespace {

std::uint64_t next_version() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

// Locates flat parameter i as (layer, is_bias, offset).
struct FlatSlot {
  std::size_t layer;
  bool is_bias;
  Eigen::Index offset;
};

template <typename Mats, typename Vecs>
FlatSlot locate(const Mats& weights, const Vecs& biases, std::size_t i) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const auto nw = static_cast<std::size_t>(weights[l].size());
    if (i < nw) return {l, false, static_cast<Eigen::Index>(i)};
    i -= nw;
    const auto nb = static_cast<std::size_t>(biases[l].size());
    if (i < nb) return {l, true, static_cast<Eigen::Index>(i)};
    i -= nb;
  }
  throw std::out_of_range("flat parameter index out of range");
}

}  // namespace

std::size_t NetGradients::size() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  }
  return n;
}

bool NetGradients::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
  }
  return true;
}

double& NetGradients::flat(std::size_t i) {
  const FlatSlot s = locate(weights, biases, i);
  return s.is_bias ? biases[s.layer](s.offset) : weights[s.layer].data()[s.offset];
}

double NetGradients::flat(std::size_t i) const {
  const FlatSlot s = locate(weights, biases, i);
  return s.is_bias ? biases[s.layer](s.offset) : weights[s.layer].data()[s.offset];
}

NetGradients& NetGradients::operator+=(const NetGradients& other) {
  if (other.weights.size() != weights.size()) throw ShapeError("gradient layer count mismatch");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += other.weights[l];
    biases[l] += other.biases[l];
  }
  return *this;
}

DenseNet::DenseNet(std::vector<int> layer_dims, OutputMode mode)
    : dims_(std::move(layer_dims)), mode_(mode), version_(next_version()) {
  if (dims_.size() < 2) {
    throw ConfigError("layer_dims needs at least an input and an output width");
  }
  for (int d : dims_) {
    if (d <= 0) throw ConfigError("layer widths must be positive");
  }
  if (dims_.back() != 1) throw ConfigError("output layer width must be 1");
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    weights_.emplace_back(Eigen::MatrixXd::Zero(dims_[l + 1], dims_[l]));
    biases_.emplace_back(Eigen::VectorXd::Zero(dims_[l + 1]));
  }
}

void DenseNet::touch() { version_ = next_version(); }

Eigen::MatrixXd& DenseNet::mutable_weight(std::size_t l) {
  touch();
  return weights_.at(l);
}

Eigen::VectorXd& DenseNet::mutable_bias(std::size_t l) {
  touch();
  return biases_.at(l);
}

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  }
  return n;
}

double DenseNet::parameter(std::size_t i) const {
  const FlatSlot s = locate(weights_, biases_, i);
  return s.is_bias ? biases_[s.layer](s.offset) : weights_[s.layer].data()[s.offset];
}

void DenseNet::set_parameter(std::size_t i, double value) {
  const FlatSlot s = locate(weights_, biases_, i);
  if (s.is_bias) {
    biases_[s.layer](s.offset) = value;
  } else {
    weights_[s.layer].data()[s.offset] = value;
  }
  touch();
}

bool DenseNet::all_finite() const {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
  }
  return true;
}

NetGradients DenseNet::zeros_like() const {
  NetGradients g;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    g.weights.emplace_back(Eigen::MatrixXd::Zero(weights_[l].rows(), weights_[l].cols()));
    g.biases.emplace_back(Eigen::VectorXd::Zero(biases_[l].size()));
  }
  return g;
}

bool DenseNet::operator==(const DenseNet& other) const {
  if (dims_ != other.dims_ || mode_ != other.mode_) return false;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (weights_[l] != other.weights_[l] || biases_[l] != other.biases_[l]) return false;
  }
  return true;
}

DenseNet init_net(const std::vector<int>& layer_dims, OutputMode mode, std::uint64_t seed) {
  DenseNet net(layer_dims, mode);
  Rng rng(derive_seed(seed, "init_net"));
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(layer_dims[l]));
    Eigen::MatrixXd& w = net.mutable_weight(l);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      w.data()[i] = scale * (2.0 * rng.uniform() - 1.0);
    }
  }
  return net;
}

ForwardPass forward(const DenseNet& net, const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != net.input_width()) {
    throw ShapeError("input width " + std::to_string(inputs.rows()) + " does not match network input " +
                     std::to_string(net.input_width()));
  }
  ForwardPass out;
  out.cache.net_version = net.version();
  out.cache.layer_dims = net.layer_dims();
  out.cache.activations.reserve(net.num_layers());
  out.cache.activations.push_back(inputs);
  const std::size_t last = net.num_layers() - 1;
  for (std::size_t l = 0; l < last; ++l) {
    Eigen::MatrixXd z = net.weight(l) * out.cache.activations.back();
    z.colwise() += net.bias(l);
    out.cache.activations.push_back(z.cwiseMax(0.0));
  }
  Eigen::RowVectorXd s = net.weight(last) * out.cache.activations.back();
  s.array() += net.bias(last)(0);
  out.raw_scores = s.transpose();
  if (net.output_mode() == OutputMode::kLogistic) {
    out.outputs = out.raw_scores.unaryExpr([](double v) {
      return std::clamp(sigmoid(v), std::numeric_limits<double>::denorm_min(), std::nextafter(1.0, 0.0));
    });
  } else {
    out.outputs = out.raw_scores;
  }
  return out;
}

Eigen::VectorXd raw_scores(const DenseNet& net, const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != net.input_width()) {
    throw ShapeError("input width " + std::to_string(inputs.rows()) + " does not match network input " +
                     std::to_string(net.input_width()));
  }
  const std::size_t last = net.num_layers() - 1;
  Eigen::MatrixXd h = inputs;
  for (std::size_t l = 0; l < last; ++l) {
    Eigen::MatrixXd z = net.weight(l) * h;
    z.colwise() += net.bias(l);
    h = z.cwiseMax(0.0);
  }
  Eigen::RowVectorXd s = net.weight(last) * h;
  s.array() += net.bias(last)(0);
  return s.transpose();
}

NetGradients backward(const DenseNet& net, const ForwardCache& cache,
                      const Eigen::VectorXd& output_gradients) {
  if (cache.net_version != net.version() || cache.layer_dims != net.layer_dims() ||
      cache.activations.size() != net.num_layers()) {
    throw ContractError("forward cache does not belong to the current network parameters");
  }
  const Eigen::Index batch = cache.activations.front().cols();
  if (output_gradients.size() != batch) {
    throw ShapeError("output gradient count does not match the cached batch");
  }
  NetGradients g;
  g.weights.resize(net.num_layers());
  g.biases.resize(net.num_layers());

  // delta holds dL/d(pre-activation) of the current layer, one column per sample.
  Eigen::MatrixXd delta = output_gradients.transpose();
  for (std::size_t l = net.num_layers(); l-- > 0;) {
    const Eigen::MatrixXd& a = cache.activations[l];
    g.weights[l] = delta * a.transpose();
    g.biases[l] = delta * Eigen::VectorXd::Ones(delta.cols());
    if (l == 0) break;
    Eigen::MatrixXd upstream = net.weight(l).transpose() * delta;
    // ReLU derivative: post-activation > 0 iff pre-activation > 0.
    delta = (a.array() > 0.0).select(upstream, 0.0);
  }
  return g;
}

AdamState make_adam(const DenseNet& net, double learning_rate) {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  AdamState s;
  s.first_moment = net.zeros_like();
  s.second_moment = net.zeros_like();
  s.learning_rate = learning_rate;
  return s;
}

void adam_step(DenseNet& net, AdamState& state, const NetGradients& gradients) {
  if (gradients.weights.size() != net.num_layers() ||
      state.first_moment.weights.size() != net.num_layers()) {
    throw ShapeError("gradient layer count does not match network");
  }
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    if (gradients.weights[l].rows() != net.weight(l).rows() ||
        gradients.weights[l].cols() != net.weight(l).cols() ||
        gradients.biases[l].size() != net.bias(l).size()) {
      throw ShapeError("gradient shape does not match layer " + std::to_string(l));
    }
  }
  const std::int64_t step = state.step_count + 1;
  if (!gradients.all_finite()) {
    throw DivergenceError("non-finite gradient at optimizer step " + std::to_string(step), step);
  }
  state.step_count = step;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
  const double lr = state.learning_rate;
  const double eps = state.epsilon;

  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    update(net.mutable_weight(l), state.first_moment.weights[l], state.second_moment.weights[l],
           gradients.weights[l]);
    update(net.mutable_bias(l), state.first_moment.biases[l], state.second_moment.biases[l],
           gradients.biases[l]);
  }
  if (!net.all_finite()) {
    throw DivergenceError("non-finite parameter after optimizer step " + std::to_string(step), step);
  }
}

GradCheckReport grad_check(const DenseNet& net, const LossEvaluator& loss,
                           const GradientEvaluator& gradient, double tolerance, std::uint64_t seed,
                           std::size_t min_coordinates, double step) {
  GradCheckReport report;
  const NetGradients analytic = gradient(net);
  const std::size_t total = net.parameter_count();
  if (analytic.size() != total) throw ShapeError("gradient size does not match parameter count");

  std::vector<std::size_t> coords;
  if (total <= min_coordinates) {
    coords.resize(total);
    for (std::size_t i = 0; i < total; ++i) coords[i] = i;
  } else {
    Rng rng(derive_seed(seed, "grad_check"));
    std::vector<std::size_t> perm = rng.permutation(total);
    coords.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(min_coordinates));
    std::sort(coords.begin(), coords.end());
  }

  DenseNet probe = net;
  const double center = loss(net);
  auto at = [&](std::size_t i, double offset) {
    const double original = probe.parameter(i);
    probe.set_parameter(i, original + offset);
    const double v = loss(probe);
    probe.set_parameter(i, original);
    return v;
  };
  for (std::size_t i : coords) {
    const double up = at(i, step), down = at(i, -step);
    const double up_half = at(i, 0.5 * step), down_half = at(i, -0.5 * step);
    const double numeric = (up - down) / (2.0 * step);
    const double numeric_half = (up_half - down_half) / step;
    const double curvature = (up - 2.0 * center + down) / step;
    const double curvature_half = 2.0 * (up_half - 2.0 * center + down_half) / (0.5 * step);
    const double roundoff =
        16.0 * std::numeric_limits<double>::epsilon() *
        std::max({std::abs(center), std::abs(up), std::abs(down), std::abs(up_half), std::abs(down_half)}) / step;
    const double allowed = tolerance * std::max({std::abs(numeric), std::abs(numeric_half), 1e-6}) + roundoff;
    if (std::abs(curvature - curvature_half) > allowed || std::abs(numeric - numeric_half) > allowed) {
      ++report.coordinates_skipped;
      continue;
    }
    const double a = analytic.flat(i);
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
    const double rel = std::abs(a - numeric) / denom;
    if (!(rel <= report.max_relative_error)) {
      report.max_relative_error = std::isnan(rel) ? kInf : rel;
      report.worst_coordinate = i;
    }
  }
  report.coordinates_checked = coords.size() - report.coordinates_skipped;
  report.passed = 2 * report.coordinates_checked >= coords.size() && report.max_relative_error < tolerance;
  return report;
}

}  // namespace mibench
