#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "mibench/errors.hpp"
#include "mibench/numeric.hpp"
#include "mibench/oracle.hpp"
#include "mibench/rng.hpp"
#include "mibench/synth.hpp"

namespace mibench {
namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("mibench_synth_" + name);
}

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  return (da * db).sum() / std::sqrt(da.square().sum() * db.square().sum());
}

TEST(RhoForMi, Examples) {
  EXPECT_EQ(rho_for_mi(20, 0.0), 0.0);
  EXPECT_NEAR(rho_for_mi(2, std::log(2.0)), std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(rho_for_mi(20, 10.0), 0.7950601, 1e-7);
  EXPECT_THROW(rho_for_mi(1, 40.0), DomainError);
  EXPECT_THROW(rho_for_mi(20, -0.1), DomainError);
  EXPECT_THROW(rho_for_mi(0, 1.0), DomainError);
}

TEST(RhoForMi, RoundTrip) {
  for (int d : {1, 20, 50, 100}) {
    for (double mi : {0.0, 0.1, 1.0, 5.0, 10.0, 15.0}) {
      const GaussianTask task{d, rho_for_mi(d, mi), false};
      const double cond = d * task.rho / ((1.0 - task.rho) * (1.0 + task.rho));
      EXPECT_NEAR(true_mi(task), mi, 1e-12 + 2.0 * cond * std::numeric_limits<double>::epsilon())
          << "d=" << d << " mi=" << mi;
    }
  }
}

TEST(TrueMi, Examples) {
  EXPECT_EQ(true_mi({20, 0.0, false}), 0.0);
  EXPECT_EQ(true_mi({20, 0.0, true}), 0.0);
  const double rho = std::sqrt(1.0 - std::exp(-1.0));
  EXPECT_NEAR(true_mi({20, rho, false}), 10.0, 1e-12);
  EXPECT_EQ(true_mi({20, rho, false}), true_mi({20, rho, true}));
  EXPECT_GT(true_mi({1, 0.999, false}), true_mi({1, 0.99, false}));
}

TEST(SamplePool, DeterministicAndShaped) {
  const GaussianTask task{3, 0.4, false};
  const SamplePool a = sample_pool(task, 50, 9);
  const SamplePool b = sample_pool(task, 50, 9);
  EXPECT_EQ(a.xs.rows(), 3);
  EXPECT_EQ(a.size(), 50);
  EXPECT_TRUE(a.xs == b.xs);
  EXPECT_TRUE(a.ys == b.ys);
  EXPECT_FALSE(a.xs == sample_pool(task, 50, 10).xs);
  EXPECT_THROW(sample_pool(task, 0, 1), DomainError);
  EXPECT_THROW(sample_pool({3, 1.0, false}, 5, 1), DomainError);
}

TEST(SamplePool, EmpiricalCorrelation) {
  for (double rho : {0.0, 0.5}) {
    const SamplePool pool = sample_pool({2, rho, false}, 100000, 21);
    for (int i = 0; i < 2; ++i) {
      const double r = correlation(pool.xs.row(i).transpose(), pool.ys.row(i).transpose());
      EXPECT_NEAR(r, rho, 0.01) << "rho=" << rho << " coord " << i;
    }
    EXPECT_NEAR(correlation(pool.xs.row(0).transpose(), pool.ys.row(1).transpose()), 0.0, 0.01);
  }
}

TEST(SamplePool, CubicIsCubeOfPlainStream) {
  const double rho = rho_for_mi(4, 2.0);
  const SamplePool plain = sample_pool({4, rho, false}, 500, 5);
  const SamplePool cubic = sample_pool({4, rho, true}, 500, 5);
  EXPECT_TRUE(plain.xs == cubic.xs);
  for (Eigen::Index i = 0; i < plain.ys.size(); ++i) {
    const double y = plain.ys.data()[i];
    EXPECT_EQ(cubic.ys.data()[i], y * y * y);
    EXPECT_NEAR(signed_cbrt(cubic.ys.data()[i]), y, 4e-16 * std::max(1.0, std::abs(y)));
  }
}

TEST(SignedCbrt, HandlesSigns) {
  EXPECT_EQ(signed_cbrt(27.0), 3.0);
  EXPECT_EQ(signed_cbrt(-8.0), -2.0);
  EXPECT_EQ(signed_cbrt(0.0), 0.0);
}

TEST(AnalyticLogRatio, Examples) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  EXPECT_NEAR(analytic_log_ratio({1, 0.5, false}, zero, zero), -0.5 * std::log(0.75), 1e-15);
  EXPECT_NEAR(analytic_log_ratio({1, 0.5, false}, zero, zero), 0.1438410, 1e-7);
  Rng rng(3);
  Eigen::VectorXd x(5), y(5);
  for (int i = 0; i < 5; ++i) {
    x(i) = rng.normal();
    y(i) = rng.normal();
  }
  EXPECT_EQ(analytic_log_ratio({5, 0.0, false}, x, y), 0.0);
  EXPECT_THROW(analytic_log_ratio({5, 1.0, false}, x, y), DomainError);
  EXPECT_THROW(analytic_log_ratio({4, 0.3, false}, x, y), ShapeError);
}

TEST(AnalyticLogRatio, CubicInvariance) {
  const GaussianTask plain{6, 0.7, false};
  const GaussianTask cubic{6, 0.7, true};
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd x(6), y(6), y3(6);
    for (int i = 0; i < 6; ++i) {
      x(i) = rng.normal();
      y(i) = rng.normal();
      y3(i) = y(i) * y(i) * y(i);
    }
    EXPECT_NEAR(analytic_log_ratio(cubic, x, y3), analytic_log_ratio(plain, x, y), 1e-13);
  }
}

TEST(AnalyticLogRatio, LawOfLargeNumbers) {
  const GaussianTask task{20, rho_for_mi(20, 10.0), false};
  const SamplePool pool = sample_pool(task, 1000000, 77);
  const Eigen::VectorXd r = analytic_log_ratios(task, pool.xs, pool.ys);
  const MeanAndError m = mean_and_standard_error(std::span<const double>(r.data(), r.size()));
  EXPECT_NEAR(m.mean, 10.0, 3.0 * m.standard_error);
}

TEST(AnalyticLogRatio, OracleConsistencyAtTestSetSize) {
  for (double mi : {0.1, 5.0, 10.0}) {
    const GaussianTask task{20, rho_for_mi(20, mi), false};
    const SamplePool pool = sample_pool(task, 10240, 1234);
    const MeanAndError m = sample_average_mi(task, pool);
    EXPECT_NEAR(m.mean, mi, 4.0 * m.standard_error) << "mi=" << mi;
  }
}

TEST(AnalyticLogRatio, ImportanceWeightsNormalize) {
  const GaussianTask task{2, rho_for_mi(2, 0.5), false};
  const SamplePool a = sample_pool({2, 0.0, false}, 200000, 1);
  const Eigen::VectorXd r = analytic_log_ratios(task, a.xs, a.ys);
  const Eigen::ArrayXd w = r.array().exp();
  const double mean = w.mean();
  const double se = std::sqrt((w - mean).square().sum() / (w.size() - 1) / w.size());
  EXPECT_NEAR(mean, 1.0, 4.0 * se);
}

TEST(StackInputs, XOnTopOfY) {
  Eigen::MatrixXd xs(2, 2), ys(1, 2);
  xs << 1, 2, 3, 4;
  ys << 5, 6;
  const Eigen::MatrixXd z = stack_inputs(xs, ys);
  ASSERT_EQ(z.rows(), 3);
  EXPECT_EQ(z(0, 1), 2.0);
  EXPECT_EQ(z(2, 0), 5.0);
}

TEST(PoolIo, BinaryRoundTrip) {
  const SamplePool pool = sample_pool({3, 0.3, true}, 40, 2);
  const auto path = temp_path("pool.bin");
  write_pool_binary(path, pool);
  EXPECT_EQ(std::filesystem::file_size(path), 32u + 40u * 6u * 8u);
  const SamplePool back = read_pool_binary(path);
  EXPECT_TRUE(back.xs == pool.xs);
  EXPECT_TRUE(back.ys == pool.ys);
  std::filesystem::remove(path);
}

TEST(PoolIo, BinaryRowMajorLayout) {
  SamplePool pool;
  pool.xs.resize(2, 2);
  pool.xs << 1, 2, 3, 4;  // pair 0 = (1, 3), pair 1 = (2, 4)
  pool.ys.resize(1, 2);
  pool.ys << 5, 6;
  const auto path = temp_path("layout.bin");
  write_pool_binary(path, pool);
  std::ifstream is(path, std::ios::binary);
  std::uint64_t header[4];
  double data[6];
  is.read(reinterpret_cast<char*>(header), sizeof header);
  is.read(reinterpret_cast<char*>(data), sizeof data);
  EXPECT_EQ(header[0], kPoolMagic);
  EXPECT_EQ(header[1], 2u);
  EXPECT_EQ(header[2], 2u);
  EXPECT_EQ(header[3], 1u);
  EXPECT_EQ(data[0], 1.0);
  EXPECT_EQ(data[1], 3.0);
  EXPECT_EQ(data[2], 2.0);
  EXPECT_EQ(data[3], 4.0);
  EXPECT_EQ(data[4], 5.0);
  EXPECT_EQ(data[5], 6.0);
  std::filesystem::remove(path);
}

TEST(PoolIo, BinaryRejectsCorruptFiles) {
  const auto path = temp_path("bad.bin");
  {
    std::ofstream os(path, std::ios::binary);
    const std::uint64_t header[4] = {12345, 1, 1, 1};
    os.write(reinterpret_cast<const char*>(header), sizeof header);
  }
  EXPECT_THROW(read_pool_binary(path), FormatError);
  write_pool_binary(path, sample_pool({2, 0.1, false}, 10, 1));
  std::filesystem::resize_file(path, 100);
  EXPECT_THROW(read_pool_binary(path), FormatError);
  std::filesystem::remove(path);
  EXPECT_THROW(read_pool_binary(path), IoError);
}

TEST(PoolIo, CsvRoundTrip) {
  const SamplePool pool = sample_pool({2, 0.6, false}, 25, 8);
  const auto path = temp_path("pool.csv");
  write_pool_csv(path, pool);
  std::ifstream is(path);
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "x0,x1,y0,y1");
  const SamplePool back = read_pool_csv(path);
  EXPECT_TRUE(back.xs == pool.xs);
  EXPECT_TRUE(back.ys == pool.ys);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace mibench
