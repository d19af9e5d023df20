#ifndef MIBENCH_SYNTH_HPP
#define MIBENCH_SYNTH_HPP

#include <cstdint>
#include <filesystem>

#include <Eigen/Dense>

namespace mibench {

// Correlated Gaussian pair (x, y) in R^dim x R^dim. Each coordinate pair
// (x_i, y_i) has correlation rho; coordinates are independent of each other.
// With `cubic`, y_i is replaced by y_i^3 after sampling.
struct GaussianTask {
  int dim = 1;
  double rho = 0.0;
  bool cubic = false;
};

// n jointly drawn pairs. Column j of xs and column j of ys form one pair,
// so xs is dx x n and ys is dy x n (the memory layout equals a row-major
// n x dx matrix).
struct SamplePool {
  Eigen::MatrixXd xs;
  Eigen::MatrixXd ys;

  Eigen::Index size() const { return xs.cols(); }
  int x_dim() const { return static_cast<int>(xs.rows()); }
  int y_dim() const { return static_cast<int>(ys.rows()); }
};

// rho = sqrt(1 - exp(-2 I / dim)).
double rho_for_mi(int dim, double target_mi);

// -(dim / 2) ln(1 - rho^2) nats; independent of the cubic flag.
double true_mi(const GaussianTask& task);

// x ~ N(0, I); y_i = rho x_i + sqrt(1 - rho^2) e_i. For each pair the
// generator draws all dim x-coordinates, then all dim noise terms, from
// Rng::normal(). Deterministic given seed.
SamplePool sample_pool(const GaussianTask& task, Eigen::Index n, std::uint64_t seed);

// Sign-preserving cube root, inverse of y -> y^3.
double signed_cbrt(double v);

// log p(x, y) - log p(x) p(y). On cubic tasks y is first mapped back through
// signed_cbrt; the Jacobians of the joint and the marginal cancel.
double analytic_log_ratio(const GaussianTask& task, const Eigen::Ref<const Eigen::VectorXd>& x,
                          const Eigen::Ref<const Eigen::VectorXd>& y);

// analytic_log_ratio for every pair of a pool.
Eigen::VectorXd analytic_log_ratios(const GaussianTask& task, const Eigen::MatrixXd& xs,
                                    const Eigen::MatrixXd& ys);

// Network input for a pool: x stacked on top of y, one column per pair.
Eigen::MatrixXd stack_inputs(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys);

// Binary layout: magic, n, dx, dy as little-endian uint64, then xs and ys as
// row-major little-endian float64.
inline constexpr std::uint64_t kPoolMagic = 0x314C4F4F5049'4DULL;  // "MIPOOL1"

void write_pool_binary(const std::filesystem::path& path, const SamplePool& pool);
SamplePool read_pool_binary(const std::filesystem::path& path);

// CSV with header x0..x{dx-1},y0..y{dy-1}; one pair per line.
void write_pool_csv(const std::filesystem::path& path, const SamplePool& pool);
SamplePool read_pool_csv(const std::filesystem::path& path);

}  // namespace mibench

#endif  // MIBENCH_SYNTH_HPP
