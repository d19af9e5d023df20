#include "mibench/estimators.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "mibench/errors.hpp"
#include "mibench/numeric.hpp"

namespace mibench {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

double parse_real(std::string_view s, std::string_view tag) {
  if (s == "inf" || s == "infinity") return kInf;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError(fmt::format("bad numeric parameter in estimator tag '{}'", tag));
  }
  return v;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double mean(const Eigen::VectorXd& v) { return v.sum() / static_cast<double>(v.size()); }

}  // namespace

std::string estimator_tag(const EstimatorVariant& variant) {
  return std::visit(Overloaded{
                        [](const Demi& d) { return fmt::format("demi({})", format_real(d.alpha)); },
                        [](const Mine&) { return std::string("mine"); },
                        [](const Smile& s) { return fmt::format("smile({})", format_real(s.tau)); },
                        [](const InfoNce&) { return std::string("infonce"); },
                        [](const Ccmi&) { return std::string("ccmi"); },
                    },
                    variant);
}

EstimatorVariant parse_estimator_tag(std::string_view tag) {
  std::string_view name = tag;
  std::string_view arg;
  if (const auto open = tag.find('('); open != std::string_view::npos) {
    if (tag.back() != ')') throw ConfigError(fmt::format("malformed estimator tag '{}'", tag));
    name = tag.substr(0, open);
    arg = tag.substr(open + 1, tag.size() - open - 2);
  }
  if (name == "demi") {
    const double alpha = arg.empty() ? 0.5 : parse_real(arg, tag);
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("demi alpha must lie inside (0, 1)");
    return Demi{alpha};
  }
  if (name == "smile") {
    if (arg.empty()) throw ConfigError("smile needs a clipping parameter, e.g. smile(1) or smile(inf)");
    const double tau = parse_real(arg, tag);
    if (!(tau > 0.0)) throw ConfigError("smile tau must be positive");
    return Smile{tau};
  }
  if (!arg.empty()) throw ConfigError(fmt::format("estimator '{}' takes no parameter", name));
  if (name == "mine") return Mine{};
  if (name == "infonce") return InfoNce{};
  if (name == "ccmi") return Ccmi{};
  throw ConfigError(fmt::format("unknown estimator '{}'", tag));
}

bool is_classifier(const EstimatorVariant& variant) {
  return std::holds_alternative<Demi>(variant) || std::holds_alternative<Ccmi>(variant);
}

OutputMode output_mode_for(const EstimatorVariant& variant) {
  return is_classifier(variant) ? OutputMode::kLogistic : OutputMode::kLinear;
}

double lifting_alpha(const EstimatorVariant& variant) {
  if (const auto* d = std::get_if<Demi>(&variant)) return d->alpha;
  if (std::holds_alternative<Ccmi>(variant)) return 0.5;
  throw ContractError("lifting alpha requested for a critic estimator");
}

std::vector<int> network_dims(const EstimatorSpec& spec, int x_dim, int y_dim) {
  std::vector<int> dims{x_dim + y_dim};
  dims.insert(dims.end(), spec.hidden_dims.begin(), spec.hidden_dims.end());
  dims.push_back(1);
  return dims;
}

LossAndGradient demi_loss(const Eigen::VectorXd& raw_scores, const Eigen::VectorXd& labels) {
  if (raw_scores.size() == 0) throw DomainError("cross-entropy of an empty batch");
  if (raw_scores.size() != labels.size()) throw ShapeError("scores and labels differ in length");
  const auto m = static_cast<double>(raw_scores.size());
  LossAndGradient out;
  out.gradient.resize(raw_scores.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < raw_scores.size(); ++i) {
    const double s = raw_scores(i);
    const double z = labels(i);
    // -z log sigmoid(s) - (1 - z) log sigmoid(-s) = softplus(s) - z s
    total += softplus(s) - z * s;
    out.gradient(i) = (sigmoid(s) - z) / m;
  }
  out.value = total / m;
  return out;
}

CriticObjective smile_objective(const Eigen::VectorXd& joint_scores,
                                const Eigen::VectorXd& marginal_scores, double tau) {
  if (joint_scores.size() == 0 || marginal_scores.size() == 0) {
    throw DomainError("critic objective needs nonempty joint and marginal batches");
  }
  if (!(tau > 0.0)) throw DomainError("clipping parameter tau must be positive");
  const bool clip = std::isfinite(tau);
  const Eigen::Index m = marginal_scores.size();
  Eigen::VectorXd clipped = marginal_scores;
  Eigen::Index n_clipped = 0;
  if (clip) {
    for (Eigen::Index k = 0; k < m; ++k) {
      const double s = marginal_scores(k);
      if (s < -tau || s > tau) ++n_clipped;
      clipped(k) = std::clamp(s, -tau, tau);
    }
  }
  CriticObjective out;
  const std::span<const double> c(clipped.data(), static_cast<std::size_t>(m));
  const double lse = log_sum_exp(c);
  out.partition = lse - std::log(static_cast<double>(m));
  out.value = mean(joint_scores) - out.partition;
  out.clipped_fraction = static_cast<double>(n_clipped) / static_cast<double>(m);
  out.joint_gradient =
      Eigen::VectorXd::Constant(joint_scores.size(), 1.0 / static_cast<double>(joint_scores.size()));
  out.marginal_gradient.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double s = marginal_scores(k);
    const bool active = !clip || (s > -tau && s < tau);
    out.marginal_gradient(k) = active ? -std::exp(clipped(k) - lse) : 0.0;
  }
  return out;
}

CriticObjective dv_objective(const Eigen::VectorXd& joint_scores,
                             const Eigen::VectorXd& marginal_scores) {
  return smile_objective(joint_scores, marginal_scores, kInf);
}

double smile_estimate(const Eigen::VectorXd& joint_scores, const Eigen::VectorXd& marginal_scores,
                      double tau) {
  return smile_objective(joint_scores, marginal_scores, tau).value;
}

CriticObjective js_objective(const Eigen::VectorXd& joint_scores, const Eigen::VectorXd& marginal_scores) {
  if (joint_scores.size() == 0 || marginal_scores.size() == 0) {
    throw DomainError("critic objective needs nonempty joint and marginal batches");
  }
  const auto n = static_cast<double>(joint_scores.size());
  const auto m = static_cast<double>(marginal_scores.size());
  CriticObjective out;
  out.joint_gradient.resize(joint_scores.size());
  out.marginal_gradient.resize(marginal_scores.size());
  double joint = 0.0;
  for (Eigen::Index i = 0; i < joint_scores.size(); ++i) {
    joint += softplus(-joint_scores(i));
    out.joint_gradient(i) = sigmoid(-joint_scores(i)) / n;
  }
  double marginal = 0.0;
  for (Eigen::Index k = 0; k < marginal_scores.size(); ++k) {
    marginal += softplus(marginal_scores(k));
    out.marginal_gradient(k) = -sigmoid(marginal_scores(k)) / m;
  }
  out.partition = marginal / m;
  out.value = -joint / n - out.partition;
  return out;
}

MatrixObjective infonce_objective(const Eigen::MatrixXd& scores) {
  if (scores.rows() != scores.cols()) {
    throw ShapeError(fmt::format("InfoNCE needs a square score matrix, got {}x{}", scores.rows(),
                                 scores.cols()));
  }
  const Eigen::Index n = scores.rows();
  if (n < 2) throw DomainError("InfoNCE needs a batch of at least 2 pairs");
  const double log_n = std::log(static_cast<double>(n));
  MatrixObjective out;
  out.gradient.resize(n, n);
  std::vector<double> row(static_cast<std::size_t>(n));
  double diag = 0.0;
  double lse_total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) row[static_cast<std::size_t>(j)] = scores(i, j);
    const double lse = log_sum_exp(row);
    diag += scores(i, i);
    lse_total += lse;
    for (Eigen::Index j = 0; j < n; ++j) {
      out.gradient(i, j) = ((i == j ? 1.0 : 0.0) - std::exp(scores(i, j) - lse)) / static_cast<double>(n);
    }
  }
  out.partition = lse_total / static_cast<double>(n) - log_n;
  out.value = (diag - lse_total) / static_cast<double>(n) + log_n;
  return out;
}

EstimateReport demi_estimate_from_scores(const Eigen::VectorXd& raw_scores, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie strictly inside (0, 1)");
  if (raw_scores.size() == 0) throw DomainError("estimate needs at least one evaluation pair");
  EstimateReport r;
  r.n_eval = raw_scores.size();
  r.diagnostics.mean_score = mean(raw_scores);
  r.diagnostics.partition_term = logit(alpha);
  r.diagnostics.saturated_count = (raw_scores.array().abs() > kSaturationLogit).count();
  r.estimate = r.diagnostics.mean_score - r.diagnostics.partition_term;
  return r;
}

EstimateReport demi_estimate(const DenseNet& classifier, const SamplePool& eval_pairs, double alpha) {
  if (classifier.output_mode() != OutputMode::kLogistic) {
    throw ContractError("DEMI needs a logistic-output classifier");
  }
  return demi_estimate_from_scores(raw_scores(classifier, stack_inputs(eval_pairs.xs, eval_pairs.ys)),
                                   alpha);
}

EstimateReport ccmi_estimate_from_scores(const Eigen::VectorXd& joint_scores,
                                         const Eigen::VectorXd& unpaired_scores) {
  if (joint_scores.size() == 0 || unpaired_scores.size() == 0) {
    throw DomainError("CCMI needs nonempty joint and unpaired evaluation sets");
  }
  const double max_abs = std::max(joint_scores.cwiseAbs().maxCoeff(), unpaired_scores.cwiseAbs().maxCoeff());
  if (!joint_scores.allFinite() || !unpaired_scores.allFinite()) {
    throw EstimateUnstableError("CCMI classifier produced non-finite scores", max_abs);
  }
  // log mean((1 - g) / g) = log mean(exp(-s))
  const Eigen::VectorXd negated = -unpaired_scores;
  EstimateReport r;
  r.n_eval = joint_scores.size();
  r.diagnostics.mean_score = mean(joint_scores);
  r.diagnostics.partition_term =
      log_mean_exp(std::span<const double>(negated.data(), static_cast<std::size_t>(negated.size())));
  r.diagnostics.saturated_count = (joint_scores.array().abs() > kSaturationLogit).count();
  r.estimate = r.diagnostics.mean_score - r.diagnostics.partition_term;
  if (!std::isfinite(r.estimate)) {
    throw EstimateUnstableError(fmt::format("CCMI estimate is not finite (max |score| {})", max_abs),
                                max_abs);
  }
  return r;
}

EstimateReport ccmi_estimate(const DenseNet& classifier, const SamplePool& joint_pairs,
                             const SamplePool& unpaired_pairs) {
  if (classifier.output_mode() != OutputMode::kLogistic) {
    throw ContractError("CCMI needs a logistic-output classifier");
  }
  return ccmi_estimate_from_scores(
      raw_scores(classifier, stack_inputs(joint_pairs.xs, joint_pairs.ys)),
      raw_scores(classifier, stack_inputs(unpaired_pairs.xs, unpaired_pairs.ys)));
}

SamplePool shuffled_pairs(const SamplePool& pool, std::uint64_t seed) {
  if (pool.size() < 2) throw DomainError("shuffling pairs needs at least 2 pairs");
  Rng rng(derive_seed(seed, "shuffled_pairs"));
  const std::vector<std::size_t> perm = rng.derangement(static_cast<std::size_t>(pool.size()));
  SamplePool out{pool.xs, Eigen::MatrixXd(pool.y_dim(), pool.size())};
  for (Eigen::Index j = 0; j < pool.size(); ++j) {
    out.ys.col(j) = pool.ys.col(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(j)]));
  }
  return out;
}

Trainer::Trainer(const EstimatorSpec& spec, int x_dim, int y_dim)
    : Trainer(spec, init_net(network_dims(spec, x_dim, y_dim), output_mode_for(spec.variant),
                             derive_seed(spec.seed, "network"))) {}

Trainer::Trainer(const EstimatorSpec& spec, DenseNet net)
    : spec_(spec), net_(std::move(net)), adam_(make_adam(net_, spec.learning_rate)) {
  if (net_.output_mode() != output_mode_for(spec.variant)) {
    throw ConfigError("network output mode does not match the estimator variant");
  }
}

BatchLoss classifier_batch_loss(const DenseNet& net, const LiftedBatch& batch,
                                const EstimatorVariant& variant) {
  if (!is_classifier(variant)) throw ContractError("lifted batches train classifier estimators only");
  const ForwardPass fp = forward(net, stack_inputs(batch.xs, batch.ys));
  const LossAndGradient ce = demi_loss(fp.raw_scores, batch.labels());

  BatchLoss r;
  r.loss = ce.value;
  std::vector<double> joint;
  std::vector<double> neg_unpaired;
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    if (batch.zs[static_cast<std::size_t>(i)]) {
      joint.push_back(fp.raw_scores(i));
    } else {
      neg_unpaired.push_back(-fp.raw_scores(i));
    }
  }
  if (joint.empty()) {
    r.estimate = kNaN;
  } else if (const auto* d = std::get_if<Demi>(&variant)) {
    r.estimate = mean(to_vector(joint)) - logit(d->alpha);
  } else {
    r.estimate = neg_unpaired.empty() ? kNaN : mean(to_vector(joint)) - log_mean_exp(neg_unpaired);
  }
  r.gradients = backward(net, fp.cache, ce.gradient);
  return r;
}

BatchLoss critic_batch_loss(const DenseNet& net, const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys,
                            const std::vector<std::size_t>& y_perm, double tau) {
  const Eigen::Index n = xs.cols();
  if (ys.cols() != n || static_cast<Eigen::Index>(y_perm.size()) != n) {
    throw ShapeError("x, y and permutation sizes differ");
  }
  const Eigen::Index dx = xs.rows();
  const Eigen::Index dy = ys.rows();
  Eigen::MatrixXd in(dx + dy, 2 * n);
  in.topLeftCorner(dx, n) = xs;
  in.topRightCorner(dx, n) = xs;
  in.bottomLeftCorner(dy, n) = ys;
  for (Eigen::Index j = 0; j < n; ++j) {
    in.col(n + j).tail(dy) = ys.col(static_cast<Eigen::Index>(y_perm[static_cast<std::size_t>(j)]));
  }
  const ForwardPass fp = forward(net, in);
  const CriticObjective value = smile_objective(fp.raw_scores.head(n), fp.raw_scores.tail(n), tau);
  const CriticObjective obj =
      std::isfinite(tau) ? js_objective(fp.raw_scores.head(n), fp.raw_scores.tail(n)) : value;
  BatchLoss r;
  r.loss = -obj.value;
  r.estimate = value.value;
  Eigen::VectorXd grad(2 * n);
  grad.head(n) = -obj.joint_gradient;
  grad.tail(n) = -obj.marginal_gradient;
  r.gradients = backward(net, fp.cache, grad);
  return r;
}

BatchLoss infonce_batch_loss(const DenseNet& net, const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys) {
  const Eigen::Index n = xs.cols();
  if (ys.cols() != n) throw ShapeError("x and y batch sizes differ");
  const Eigen::Index dx = xs.rows();
  const Eigen::Index dy = ys.rows();
  // Column i + j n pairs x_i with y_j, so the scores reshape column-major
  // into the n x n matrix with entry (i, j) = f(x_i, y_j).
  Eigen::MatrixXd in(dx + dy, n * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      in.col(i + j * n).head(dx) = xs.col(i);
      in.col(i + j * n).tail(dy) = ys.col(j);
    }
  }
  const ForwardPass fp = forward(net, in);
  const Eigen::Map<const Eigen::MatrixXd> scores(fp.raw_scores.data(), n, n);
  const MatrixObjective obj = infonce_objective(scores);
  BatchLoss r;
  r.loss = -obj.value;
  r.estimate = obj.value;
  const Eigen::VectorXd grad = -Eigen::Map<const Eigen::VectorXd>(obj.gradient.data(), n * n);
  r.gradients = backward(net, fp.cache, grad);
  return r;
}

StepResult Trainer::step(const LiftedBatch& batch) {
  BatchLoss b = classifier_batch_loss(net_, batch, spec_.variant);
  if (!std::isfinite(b.loss)) throw DivergenceError("non-finite cross-entropy loss", adam_.step_count + 1);
  adam_step(net_, adam_, b.gradients);
  return {b.loss, b.estimate};
}

StepResult Trainer::step(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys, Rng& rng) {
  if (is_classifier(spec_.variant)) throw ContractError("classifier estimators train on lifted batches");
  if (xs.cols() < 2) throw DomainError("critic training needs a batch of at least 2 pairs");
  BatchLoss b;
  if (std::holds_alternative<InfoNce>(spec_.variant)) {
    b = infonce_batch_loss(net_, xs, ys);
  } else {
    const double tau = std::holds_alternative<Smile>(spec_.variant) ? std::get<Smile>(spec_.variant).tau : kInf;
    b = critic_batch_loss(net_, xs, ys, rng.derangement(static_cast<std::size_t>(xs.cols())), tau);
  }
  if (!std::isfinite(b.loss)) throw DivergenceError("non-finite critic objective", adam_.step_count + 1);
  adam_step(net_, adam_, b.gradients);
  return {b.loss, b.estimate};
}

TrainedModel train(const EstimatorSpec& spec, const SamplePool& train_pool) {
  if (spec.epochs < 0) throw ConfigError("epochs must be nonnegative");
  if (spec.batch_size < 2) throw ConfigError("batch size must be at least 2");
  if (train_pool.size() < spec.batch_size) throw ConfigError("training pool is smaller than one batch");
  Trainer trainer(spec, train_pool.x_dim(), train_pool.y_dim());
  TrainingLog log;

  auto run_step = [&](int epoch, Eigen::Index batch, auto&& fn) -> double {
    try {
      const StepResult step = fn();
      return is_classifier(spec.variant) ? step.loss : step.estimate;
    } catch (const DivergenceError& e) {
      throw DivergenceError(fmt::format("{} (epoch {}, batch {})", e.what(), epoch, batch), e.step());
    }
  };

  if (is_classifier(spec.variant)) {
    EpochStream stream(train_pool, lifting_alpha(spec.variant), spec.batch_size,
                       derive_seed(spec.seed, "train_stream"));
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
      double total = 0.0;
      for (Eigen::Index b = 0; b < stream.batches_per_epoch(); ++b) {
        const LiftedBatch batch = stream.next();
        total += run_step(epoch, b, [&] { return trainer.step(batch); });
      }
      log.epoch_values.push_back(total / static_cast<double>(stream.batches_per_epoch()));
    }
  } else {
    Rng rng(derive_seed(spec.seed, "train_batches"));
    const Eigen::Index n = train_pool.size();
    const Eigen::Index batches = (n + spec.batch_size - 1) / spec.batch_size;
    const int dx = train_pool.x_dim();
    const int dy = train_pool.y_dim();
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
      const std::vector<std::size_t> perm = rng.permutation(static_cast<std::size_t>(n));
      double total = 0.0;
      Eigen::Index used = 0;
      for (Eigen::Index b = 0; b < batches; ++b) {
        const Eigen::Index start = b * spec.batch_size;
        const Eigen::Index m = std::min(spec.batch_size, n - start);
        if (m < 2) continue;
        Eigen::MatrixXd xs(dx, m);
        Eigen::MatrixXd ys(dy, m);
        for (Eigen::Index j = 0; j < m; ++j) {
          const auto src = static_cast<Eigen::Index>(perm[static_cast<std::size_t>(start + j)]);
          xs.col(j) = train_pool.xs.col(src);
          ys.col(j) = train_pool.ys.col(src);
        }
        total += run_step(epoch, b, [&] { return trainer.step(xs, ys, rng); });
        ++used;
      }
      log.epoch_values.push_back(total / static_cast<double>(used));
    }
  }
  log.steps = trainer.steps();
  return TrainedModel{trainer.release(), std::move(log)};
}

EstimateReport estimate(const EstimatorSpec& spec, const DenseNet& model, const SamplePool& eval_pool) {
  if (model.output_mode() != output_mode_for(spec.variant)) {
    throw ContractError("model output mode does not match the estimator variant");
  }
  const std::uint64_t shuffle_seed = derive_seed(spec.seed, "eval_shuffle");
  return std::visit(
      Overloaded{
          [&](const Demi& d) { return demi_estimate(model, eval_pool, d.alpha); },
          [&](const Ccmi&) { return ccmi_estimate(model, eval_pool, shuffled_pairs(eval_pool, shuffle_seed)); },
          [&](const InfoNce&) {
            const Eigen::Index block = spec.eval_batch > 0 ? spec.eval_batch : spec.batch_size;
            if (block < 2) throw ConfigError("InfoNCE evaluation block must hold at least 2 pairs");
            const Eigen::Index n = eval_pool.size();
            const int dx = eval_pool.x_dim();
            const int dy = eval_pool.y_dim();
            double value = 0.0;
            double diag = 0.0;
            double partition = 0.0;
            Eigen::Index counted = 0;
            for (Eigen::Index start = 0; start < n; start += block) {
              const Eigen::Index m = std::min(block, n - start);
              if (m < 2) break;
              Eigen::MatrixXd in(dx + dy, m * m);
              for (Eigen::Index j = 0; j < m; ++j) {
                for (Eigen::Index i = 0; i < m; ++i) {
                  in.col(i + j * m).head(dx) = eval_pool.xs.col(start + i);
                  in.col(i + j * m).tail(dy) = eval_pool.ys.col(start + j);
                }
              }
              const Eigen::VectorXd s = raw_scores(model, in);
              const Eigen::Map<const Eigen::MatrixXd> scores(s.data(), m, m);
              const MatrixObjective obj = infonce_objective(scores);
              const auto w = static_cast<double>(m);
              value += w * obj.value;
              diag += scores.diagonal().sum();
              partition += w * obj.partition;
              counted += m;
            }
            if (counted == 0) throw DomainError("InfoNCE evaluation needs at least 2 pairs");
            EstimateReport r;
            r.n_eval = counted;
            r.estimate = value / static_cast<double>(counted);
            r.diagnostics.mean_score = diag / static_cast<double>(counted);
            r.diagnostics.partition_term = partition / static_cast<double>(counted);
            return r;
          },
          [&](const auto& critic) {
            double tau = kInf;
            if constexpr (std::is_same_v<std::decay_t<decltype(critic)>, Smile>) tau = critic.tau;
            const SamplePool marginal = shuffled_pairs(eval_pool, shuffle_seed);
            const Eigen::VectorXd joint_scores = raw_scores(model, stack_inputs(eval_pool.xs, eval_pool.ys));
            const Eigen::VectorXd marginal_scores = raw_scores(model, stack_inputs(marginal.xs, marginal.ys));
            const CriticObjective obj = smile_objective(joint_scores, marginal_scores, tau);
            EstimateReport r;
            r.n_eval = eval_pool.size();
            r.estimate = obj.value;
            r.diagnostics.mean_score = mean(joint_scores);
            r.diagnostics.partition_term = obj.partition;
            r.diagnostics.clipped_fraction = obj.clipped_fraction;
            return r;
          },
      },
      spec.variant);
}

namespace {

void put_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }

std::uint64_t get_u64(std::istream& is, std::uint64_t offset) {
  std::uint64_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 8)) throw FormatError("truncated model file", offset);
  return v;
}

}  // namespace

void save_model(const std::filesystem::path& path, const DenseNet& net) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open model file for writing", path.string());
  put_u64(os, net.layer_dims().size());
  for (int d : net.layer_dims()) put_u64(os, static_cast<std::uint64_t>(d));
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w = net.weight(l);
    os.write(reinterpret_cast<const char*>(w.data()), static_cast<std::streamsize>(w.size() * 8));
    os.write(reinterpret_cast<const char*>(net.bias(l).data()),
             static_cast<std::streamsize>(net.bias(l).size() * 8));
  }
  const auto mode = static_cast<char>(net.output_mode());
  os.write(&mode, 1);
  if (!os) throw IoError("failed writing model file", path.string());
}

DenseNet load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open model file", path.string());
  const std::uint64_t count = get_u64(is, 0);
  if (count < 2 || count > 1024) throw FormatError("implausible layer count in model file", 0);
  std::vector<int> dims;
  std::uint64_t offset = 8;
  for (std::uint64_t i = 0; i < count; ++i, offset += 8) {
    const std::uint64_t d = get_u64(is, offset);
    if (d == 0 || d > (1u << 24)) throw FormatError("implausible layer width in model file", offset);
    dims.push_back(static_cast<int>(d));
  }
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w(dims[l + 1], dims[l]);
    if (!is.read(reinterpret_cast<char*>(w.data()), static_cast<std::streamsize>(w.size() * 8))) {
      throw FormatError("truncated weights in model file", offset);
    }
    offset += static_cast<std::uint64_t>(w.size()) * 8;
    Eigen::VectorXd b(dims[l + 1]);
    if (!is.read(reinterpret_cast<char*>(b.data()), static_cast<std::streamsize>(b.size() * 8))) {
      throw FormatError("truncated biases in model file", offset);
    }
    offset += static_cast<std::uint64_t>(b.size()) * 8;
    weights.emplace_back(w);
    biases.push_back(std::move(b));
  }
  char mode = 0;
  if (!is.read(&mode, 1)) throw FormatError("missing output mode byte", offset);
  if (mode != 0 && mode != 1) throw FormatError("unknown output mode byte", offset);
  DenseNet net(dims, static_cast<OutputMode>(mode));
  for (std::size_t l = 0; l < weights.size(); ++l) {
    net.mutable_weight(l) = weights[l];
    net.mutable_bias(l) = biases[l];
  }
  return net;
}

}  // namespace mibench
