#ifndef MIBENCH_IDX_HPP
#define MIBENCH_IDX_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mibench {

// Greyscale images, one column per image, row-major pixels scaled to [0, 1].
struct ImageSet {
  int rows = 0;
  int cols = 0;
  Eigen::MatrixXd pixels;

  Eigen::Index size() const { return pixels.cols(); }
};

// IDX3: big-endian uint32 magic 0x00000803, count, rows, cols, then unsigned
// bytes. Malformed input raises FormatError carrying the byte offset.
ImageSet read_idx_images(const std::filesystem::path& path);
// IDX1: magic 0x00000801, count, then one unsigned byte per label.
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);

void write_idx_images(const std::filesystem::path& path, int rows, int cols,
                      std::span<const std::uint8_t> bytes);

}  // namespace mibench

#endif  // MIBENCH_IDX_HPP
