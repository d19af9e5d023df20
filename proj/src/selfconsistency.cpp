#include "mibench/selfconsistency.hpp"

#include <fstream>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "mibench/errors.hpp"
#include "mibench/estimators.hpp"
#include "mibench/rng.hpp"

namespace mibench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(static_cast<Eigen::Index>(idx[j]));
  return out;
}

Eigen::MatrixXd stack(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() + b.rows(), a.cols());
  out.topRows(a.rows()) = a;
  out.bottomRows(b.rows()) = b;
  return out;
}

struct Split {
  SamplePool train;
  SamplePool eval;
};

double train_and_estimate(const Split& split, const SelfConsistencyConfig& config, const std::string& tag) {
  EstimatorSpec spec;
  spec.variant = Demi{config.alpha};
  spec.epochs = config.epochs;
  spec.batch_size = config.batch_size;
  spec.learning_rate = config.learning_rate;
  spec.hidden_dims = config.hidden_dims;
  spec.seed = derive_seed(config.seed, "selfconsistency|" + tag);
  const TrainedModel model = train(spec, split.train);
  return estimate(spec, model.net, split.eval).estimate;
}

}  // namespace

ImageSet mask_rows(const ImageSet& images, int t) {
  if (t < 0 || t > images.rows) throw DomainError("row mask must lie in [0, rows]");
  ImageSet out = images;
  for (int r = t; r < images.rows; ++r) {
    out.pixels.middleRows(static_cast<Eigen::Index>(r) * images.cols, images.cols).setZero();
  }
  return out;
}

ImageSet downsample2(const ImageSet& images) {
  const int rows = images.rows / 2;
  const int cols = images.cols / 2;
  if (rows == 0 || cols == 0) throw ShapeError("images are too small to downsample");
  ImageSet out{rows, cols, Eigen::MatrixXd(static_cast<Eigen::Index>(rows) * cols, images.size())};
  for (Eigen::Index i = 0; i < images.size(); ++i) {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        auto px = [&](int rr, int cc) { return images.pixels(static_cast<Eigen::Index>(rr) * images.cols + cc, i); };
        out.pixels(static_cast<Eigen::Index>(r) * cols + c, i) =
            0.25 * (px(2 * r, 2 * c) + px(2 * r, 2 * c + 1) + px(2 * r + 1, 2 * c) + px(2 * r + 1, 2 * c + 1));
      }
    }
  }
  return out;
}

std::vector<SelfConsistencyPoint> run_selfconsistency(const ImageSet& images,
                                                      const SelfConsistencyConfig& config) {
  if (config.rows_step < 1) throw ConfigError("rows_step must be at least 1");
  const Eigen::Index n = images.size();
  const Eigen::Index n_eval = std::min(config.eval_size, n / 6);
  if (n_eval < 2 || n - n_eval < config.batch_size) throw ConfigError("too few images for a train/eval split");

  Rng rng(derive_seed(config.seed, "selfconsistency_split"));
  const std::vector<std::size_t> order = rng.permutation(static_cast<std::size_t>(n));
  const std::vector<std::size_t> train_idx(order.begin(), order.end() - n_eval);
  const std::vector<std::size_t> eval_idx(order.end() - n_eval, order.end());
  // Partner image for the additivity construction, drawn within each split.
  auto partners = [&](const std::vector<std::size_t>& idx) {
    const std::vector<std::size_t> p = rng.permutation(idx.size());
    std::vector<std::size_t> out(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) out[j] = idx[p[j]];
    return out;
  };
  const std::vector<std::size_t> train_partner = partners(train_idx);
  const std::vector<std::size_t> eval_partner = partners(eval_idx);

  const Eigen::MatrixXd x_full = downsample2(images).pixels;
  std::map<int, Eigen::MatrixXd> masked;
  auto masked_at = [&](int t) -> const Eigen::MatrixXd& {
    auto it = masked.find(t);
    if (it == masked.end()) it = masked.emplace(t, downsample2(mask_rows(images, t)).pixels).first;
    return it->second;
  };

  std::vector<int> ts;
  for (int t = 0; t < images.rows; t += config.rows_step) ts.push_back(t);
  ts.push_back(images.rows);

  auto make_split = [&](auto&& build) {
    return Split{build(train_idx, train_partner), build(eval_idx, eval_partner)};
  };

  std::vector<SelfConsistencyPoint> points;
  for (int t : ts) {
    SelfConsistencyPoint p;
    p.t = t;
    const Eigen::MatrixXd& y = masked_at(t);
    p.independence_raw = train_and_estimate(
        make_split([&](const auto& idx, const auto&) {
          return SamplePool{select_columns(x_full, idx), select_columns(y, idx)};
        }),
        config, fmt::format("independence|t={}", t));

    if (t >= 3) {
      const Eigen::MatrixXd& y2 = masked_at(t - 3);
      const double joint = train_and_estimate(
          make_split([&](const auto& idx, const auto&) {
            const Eigen::MatrixXd xs = select_columns(x_full, idx);
            return SamplePool{stack(xs, xs), stack(select_columns(y, idx), select_columns(y2, idx))};
          }),
          config, fmt::format("processing|t={}", t));
      p.data_processing_ratio = joint / p.independence_raw;
    } else {
      p.data_processing_ratio = kNaN;
    }

    const double pair = train_and_estimate(
        make_split([&](const auto& idx, const auto& partner) {
          return SamplePool{stack(select_columns(x_full, idx), select_columns(x_full, partner)),
                            stack(select_columns(y, idx), select_columns(y, partner))};
        }),
        config, fmt::format("additivity|t={}", t));
    p.additivity_ratio = pair / p.independence_raw;
    points.push_back(p);
  }
  const double final_value = points.back().independence_raw;
  for (SelfConsistencyPoint& p : points) p.independence_normalized = p.independence_raw / final_value;
  return points;
}

void write_selfconsistency_csv(const std::filesystem::path& path,
                               const std::vector<SelfConsistencyPoint>& points) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open self-consistency output for writing", path.string());
  os << "t,independence_raw,independence_normalized,data_processing_ratio,additivity_ratio\n";
  for (const SelfConsistencyPoint& p : points) {
    os << fmt::format("{},{},{},{},{}\n", p.t, p.independence_raw, p.independence_normalized,
                      p.data_processing_ratio, p.additivity_ratio);
  }
  if (!os) throw IoError("failed writing self-consistency output", path.string());
}

}  // namespace mibench
