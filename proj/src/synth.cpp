#include "mibench/synth.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "mibench/errors.hpp"
#include "mibench/rng.hpp"

namespace mibench {

static_assert(std::endian::native == std::endian::little, "pool I/O assumes a little-endian host");

double rho_for_mi(int dim, double target_mi) {
  if (dim < 1) throw DomainError("dimension must be at least 1");
  if (!(target_mi >= 0.0) || !std::isfinite(target_mi)) {
    throw DomainError("target MI must be a finite nonnegative number of nats");
  }
  const double rho = std::sqrt(-std::expm1(-2.0 * target_mi / dim));
  if (!(rho < 1.0)) throw DomainError("target MI per dimension is too large to represent rho below 1");
  return rho;
}

double true_mi(const GaussianTask& task) {
  return -0.5 * task.dim * std::log((1.0 - task.rho) * (1.0 + task.rho));
}

SamplePool sample_pool(const GaussianTask& task, Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw DomainError("pool size must be at least 1");
  if (task.dim < 1) throw DomainError("dimension must be at least 1");
  if (!(task.rho >= 0.0 && task.rho < 1.0)) throw DomainError("rho must lie in [0, 1)");
  SamplePool pool{Eigen::MatrixXd(task.dim, n), Eigen::MatrixXd(task.dim, n)};
  Rng rng(derive_seed(seed, "sample_pool"));
  const double noise = std::sqrt(1.0 - task.rho * task.rho);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (int i = 0; i < task.dim; ++i) pool.xs(i, j) = rng.normal();
    for (int i = 0; i < task.dim; ++i) {
      double y = task.rho * pool.xs(i, j) + noise * rng.normal();
      if (task.cubic) y = y * y * y;
      pool.ys(i, j) = y;
    }
  }
  return pool;
}

double signed_cbrt(double v) {
  double best = std::cbrt(v);
  if (!std::isfinite(best) || best == 0.0) return best;
  double best_err = std::abs(best * best * best - v);
  for (double c : {std::nextafter(best, -INFINITY), std::nextafter(best, INFINITY)}) {
    const double err = std::abs(c * c * c - v);
    if (err < best_err) {
      best = c;
      best_err = err;
    }
  }
  return best;
}

double analytic_log_ratio(const GaussianTask& task, const Eigen::Ref<const Eigen::VectorXd>& x,
                          const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (!(task.rho < 1.0)) throw DomainError("log ratio is undefined for rho >= 1");
  if (x.size() != task.dim || y.size() != task.dim) {
    throw ShapeError("pair dimensions do not match the task");
  }
  const double r = task.rho;
  if (r == 0.0) return 0.0;
  const double scale = r / (2.0 * (1.0 - r) * (1.0 + r));
  double quad = 0.0;
  for (int i = 0; i < task.dim; ++i) {
    const double yi = task.cubic ? signed_cbrt(y(i)) : y(i);
    quad += 2.0 * x(i) * yi - r * (x(i) * x(i) + yi * yi);
  }
  return -0.5 * task.dim * std::log1p(-r * r) + scale * quad;
}

Eigen::VectorXd analytic_log_ratios(const GaussianTask& task, const Eigen::MatrixXd& xs,
                                    const Eigen::MatrixXd& ys) {
  if (xs.cols() != ys.cols()) throw ShapeError("x and y pair counts differ");
  Eigen::VectorXd out(xs.cols());
  for (Eigen::Index j = 0; j < xs.cols(); ++j) out(j) = analytic_log_ratio(task, xs.col(j), ys.col(j));
  return out;
}

Eigen::MatrixXd stack_inputs(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys) {
  if (xs.cols() != ys.cols()) throw ShapeError("x and y pair counts differ");
  Eigen::MatrixXd in(xs.rows() + ys.rows(), xs.cols());
  in.topRows(xs.rows()) = xs;
  in.bottomRows(ys.rows()) = ys;
  return in;
}

namespace {

void write_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }

}  // namespace

void write_pool_binary(const std::filesystem::path& path, const SamplePool& pool) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open pool file for writing", path.string());
  write_u64(os, kPoolMagic);
  write_u64(os, static_cast<std::uint64_t>(pool.size()));
  write_u64(os, static_cast<std::uint64_t>(pool.x_dim()));
  write_u64(os, static_cast<std::uint64_t>(pool.y_dim()));
  os.write(reinterpret_cast<const char*>(pool.xs.data()),
           static_cast<std::streamsize>(pool.xs.size() * sizeof(double)));
  os.write(reinterpret_cast<const char*>(pool.ys.data()),
           static_cast<std::streamsize>(pool.ys.size() * sizeof(double)));
  if (!os) throw IoError("failed writing pool file", path.string());
}

SamplePool read_pool_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open pool file", path.string());
  std::uint64_t header[4];
  for (int i = 0; i < 4; ++i) {
    if (!is.read(reinterpret_cast<char*>(&header[i]), 8)) {
      throw FormatError("truncated pool header", static_cast<std::uint64_t>(8 * i));
    }
  }
  if (header[0] != kPoolMagic) throw FormatError("bad pool magic", 0);
  const std::uint64_t n = header[1];
  const std::uint64_t dx = header[2];
  const std::uint64_t dy = header[3];
  if (n == 0 || dx == 0 || dy == 0) throw FormatError("pool header has a zero dimension", 8);
  SamplePool pool{Eigen::MatrixXd(dx, n), Eigen::MatrixXd(dy, n)};
  if (!is.read(reinterpret_cast<char*>(pool.xs.data()), static_cast<std::streamsize>(n * dx * 8))) {
    throw FormatError("truncated x block", 32);
  }
  if (!is.read(reinterpret_cast<char*>(pool.ys.data()), static_cast<std::streamsize>(n * dy * 8))) {
    throw FormatError("truncated y block", 32 + n * dx * 8);
  }
  return pool;
}

void write_pool_csv(const std::filesystem::path& path, const SamplePool& pool) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open pool CSV for writing", path.string());
  std::string line;
  for (int i = 0; i < pool.x_dim(); ++i) line += fmt::format("{}x{}", i ? "," : "", i);
  for (int i = 0; i < pool.y_dim(); ++i) line += fmt::format(",y{}", i);
  os << line << '\n';
  for (Eigen::Index j = 0; j < pool.size(); ++j) {
    line.clear();
    for (int i = 0; i < pool.x_dim(); ++i) line += fmt::format("{}{}", i ? "," : "", pool.xs(i, j));
    for (int i = 0; i < pool.y_dim(); ++i) line += fmt::format(",{}", pool.ys(i, j));
    os << line << '\n';
  }
  if (!os) throw IoError("failed writing pool CSV", path.string());
}

SamplePool read_pool_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open pool CSV", path.string());
  std::string header;
  if (!std::getline(is, header)) throw IoError("empty pool CSV", path.string());
  int dx = 0;
  int dy = 0;
  {
    std::stringstream ss(header);
    std::string col;
    while (std::getline(ss, col, ',')) {
      if (!col.empty() && col[0] == 'x') {
        ++dx;
      } else if (!col.empty() && col[0] == 'y') {
        ++dy;
      } else {
        throw ConfigError("unexpected pool CSV column '" + col + "'");
      }
    }
  }
  std::vector<double> values;
  std::string line;
  Eigen::Index n = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int count = 0;
    while (std::getline(ss, cell, ',')) {
      values.push_back(std::stod(cell));
      ++count;
    }
    if (count != dx + dy) throw ConfigError(fmt::format("pool CSV row {} has {} columns", n + 1, count));
    ++n;
  }
  if (n == 0 || dx == 0 || dy == 0) throw ConfigError("pool CSV holds no pairs");
  SamplePool pool{Eigen::MatrixXd(dx, n), Eigen::MatrixXd(dy, n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    for (int i = 0; i < dx; ++i) pool.xs(i, j) = values[static_cast<std::size_t>(j * (dx + dy) + i)];
    for (int i = 0; i < dy; ++i) pool.ys(i, j) = values[static_cast<std::size_t>(j * (dx + dy) + dx + i)];
  }
  return pool;
}

}  // namespace mibench
