#include "mibench/idx.hpp"

#include <fstream>
#include <iterator>

#include "mibench/errors.hpp"

namespace mibench {

namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open IDX file", path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t offset) {
  if (offset + 4 > b.size()) throw FormatError("truncated IDX header", offset);
  return (std::uint32_t{b[offset]} << 24) | (std::uint32_t{b[offset + 1]} << 16) |
         (std::uint32_t{b[offset + 2]} << 8) | std::uint32_t{b[offset + 3]};
}

void put_be32(std::ostream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                     static_cast<char>(v)};
  os.write(b, 4);
}

}  // namespace

ImageSet read_idx_images(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> b = slurp(path);
  if (be32(b, 0) != 0x00000803) throw FormatError("not an IDX3 unsigned-byte image file", 0);
  const std::uint32_t n = be32(b, 4);
  const std::uint32_t rows = be32(b, 8);
  const std::uint32_t cols = be32(b, 12);
  if (n == 0) throw FormatError("IDX file holds no images", 4);
  if (rows == 0 || cols == 0 || rows > 4096 || cols > 4096) throw FormatError("implausible image size", 8);
  const std::size_t pixels = std::size_t{rows} * cols;
  const std::size_t need = 16 + pixels * n;
  if (b.size() < need) throw FormatError("IDX pixel data is truncated", b.size());
  ImageSet set{static_cast<int>(rows), static_cast<int>(cols), Eigen::MatrixXd(pixels, n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < pixels; ++p) {
      set.pixels(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i)) = b[16 + i * pixels + p] / 255.0;
    }
  }
  return set;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> b = slurp(path);
  if (be32(b, 0) != 0x00000801) throw FormatError("not an IDX1 unsigned-byte label file", 0);
  const std::uint32_t n = be32(b, 4);
  if (b.size() < 8 + std::size_t{n}) throw FormatError("IDX label data is truncated", b.size());
  return {b.begin() + 8, b.begin() + 8 + n};
}

void write_idx_images(const std::filesystem::path& path, int rows, int cols,
                      std::span<const std::uint8_t> bytes) {
  const std::size_t pixels = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  if (pixels == 0 || bytes.size() % pixels != 0) throw ShapeError("byte count is not a whole number of images");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open IDX file for writing", path.string());
  put_be32(os, 0x00000803);
  put_be32(os, static_cast<std::uint32_t>(bytes.size() / pixels));
  put_be32(os, static_cast<std::uint32_t>(rows));
  put_be32(os, static_cast<std::uint32_t>(cols));
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("failed writing IDX file", path.string());
}

}  // namespace mibench
