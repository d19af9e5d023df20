#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "mibench/errors.hpp"
#include "mibench/idx.hpp"
#include "mibench/rng.hpp"
#include "mibench/selfconsistency.hpp"

namespace mibench {
namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("mibench_idx_" + name);
}

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream os(p, std::ios::binary);
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> random_bytes(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint8_t> b(n);
  for (auto& v : b) v = static_cast<std::uint8_t>(rng.index(256));
  return b;
}

std::vector<std::uint8_t> template_images(int n, int pixels, int n_templates, std::uint64_t seed) {
  const std::vector<std::uint8_t> templates = random_bytes(static_cast<std::size_t>(n_templates) * pixels, seed);
  Rng rng(seed + 1);
  std::vector<std::uint8_t> out(static_cast<std::size_t>(n) * pixels);
  for (int i = 0; i < n; ++i) {
    const std::size_t k = rng.index(static_cast<std::uint64_t>(n_templates));
    for (int p = 0; p < pixels; ++p) {
      const double v = templates[k * pixels + p] + 20.0 * rng.normal();
      out[static_cast<std::size_t>(i) * pixels + p] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
  }
  return out;
}

TEST(Idx, ImagesRoundTrip) {
  const auto path = temp_path("imgs.idx");
  std::vector<std::uint8_t> bytes = random_bytes(3 * 4 * 5, 1);
  bytes[0] = 255;
  bytes[1] = 0;
  write_idx_images(path, 4, 5, bytes);
  EXPECT_EQ(std::filesystem::file_size(path), 16u + bytes.size());
  const ImageSet set = read_idx_images(path);
  EXPECT_EQ(set.rows, 4);
  EXPECT_EQ(set.cols, 5);
  ASSERT_EQ(set.size(), 3);
  EXPECT_EQ(set.pixels(0, 0), 1.0);
  EXPECT_EQ(set.pixels(1, 0), 0.0);
  for (Eigen::Index i = 0; i < set.size(); ++i) {
    for (Eigen::Index p = 0; p < 20; ++p) EXPECT_EQ(set.pixels(p, i), bytes[i * 20 + p] / 255.0);
  }
  std::filesystem::remove(path);
}

TEST(Idx, HeaderIsBigEndian) {
  const auto path = temp_path("hdr.idx");
  write_bytes(path, {0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2, 10, 20, 30, 40});
  const ImageSet set = read_idx_images(path);
  EXPECT_EQ(set.size(), 1);
  EXPECT_EQ(set.pixels(3, 0), 40.0 / 255.0);
  std::filesystem::remove(path);
}

TEST(Idx, MalformedHeaderReportsOffset) {
  const auto path = temp_path("bad.idx");
  write_bytes(path, {0, 0, 8, 1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2, 1, 2, 3, 4});
  try {
    read_idx_images(path);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
  write_bytes(path, {0, 0, 8, 3, 0, 0, 0, 1, 0, 0});
  try {
    read_idx_images(path);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 8u);
  }
  write_bytes(path, {0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2, 1, 2, 3, 4});
  try {
    read_idx_images(path);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 20u);
  }
  std::filesystem::remove(path);
  EXPECT_THROW(read_idx_images(path), IoError);
}

TEST(Idx, Labels) {
  const auto path = temp_path("labels.idx");
  write_bytes(path, {0, 0, 8, 1, 0, 0, 0, 3, 7, 1, 9});
  EXPECT_EQ(read_idx_labels(path), (std::vector<std::uint8_t>{7, 1, 9}));
  write_bytes(path, {0, 0, 8, 1, 0, 0, 0, 4, 7, 1, 9});
  EXPECT_THROW(read_idx_labels(path), FormatError);
  std::filesystem::remove(path);
}

TEST(Masking, KeepsTopRows) {
  ImageSet set{4, 2, Eigen::MatrixXd::Ones(8, 2)};
  const ImageSet m = mask_rows(set, 1);
  EXPECT_EQ(m.pixels.col(0).head(2).sum(), 2.0);
  EXPECT_EQ(m.pixels.col(0).tail(6).sum(), 0.0);
  EXPECT_TRUE(mask_rows(set, 4).pixels == set.pixels);
  EXPECT_TRUE(mask_rows(set, 0).pixels.isZero(0.0));
  EXPECT_THROW(mask_rows(set, 5), DomainError);
}

TEST(Masking, DownsampleAverages) {
  ImageSet set{2, 4, Eigen::MatrixXd(8, 1)};
  set.pixels << 0, 1, 2, 3, 4, 5, 6, 7;
  const ImageSet d = downsample2(set);
  EXPECT_EQ(d.rows, 1);
  EXPECT_EQ(d.cols, 2);
  EXPECT_EQ(d.pixels(0, 0), (0 + 1 + 4 + 5) / 4.0);
  EXPECT_EQ(d.pixels(1, 0), (2 + 3 + 6 + 7) / 4.0);
}

TEST(SelfConsistency, RunsOnSyntheticIdx) {
  const auto path = temp_path("synthetic.idx");
  const int n = 900;
  write_idx_images(path, 8, 8, template_images(n, 64, 10, 3));
  const ImageSet images = read_idx_images(path);
  SelfConsistencyConfig c;
  c.rows_step = 3;
  c.epochs = 30;
  c.hidden_dims = {32, 32};
  c.learning_rate = 2e-3;
  const std::vector<SelfConsistencyPoint> points = run_selfconsistency(images, c);
  ASSERT_EQ(points.size(), 4u);
  EXPECT_EQ(points[0].t, 0);
  EXPECT_EQ(points[1].t, 3);
  EXPECT_EQ(points[3].t, 8);
  EXPECT_TRUE(std::isnan(points[0].data_processing_ratio));
  EXPECT_FALSE(std::isnan(points[1].data_processing_ratio));
  EXPECT_EQ(points.back().independence_normalized, 1.0);
  EXPECT_LT(std::abs(points[0].independence_raw), 0.2);
  EXPECT_GT(points.back().independence_raw, 1.0);

  const auto csv = temp_path("sc.csv");
  write_selfconsistency_csv(csv, points);
  std::ifstream is(csv);
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "t,independence_raw,independence_normalized,data_processing_ratio,additivity_ratio");
  std::filesystem::remove(csv);
  std::filesystem::remove(path);

  c.rows_step = 0;
  EXPECT_THROW(run_selfconsistency(images, c), ConfigError);
}

}  // namespace
}  // namespace mibench
