#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

namespace vpr {

inline constexpr int kMinImageSide = 16;

/// 8-bit interleaved RGB raster, row-major.
class Image {
 public:
  Image() = default;
  /// Throws ImageTooSmall when either side is below kMinImageSide and
  /// InvalidParams when `data` does not hold width * height * 3 bytes.
  Image(int width, int height, std::vector<std::uint8_t> data);
  /// Zero-filled image.
  Image(int width, int height);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }

  const std::vector<std::uint8_t>& data() const noexcept { return data_; }
  std::vector<std::uint8_t>& data() noexcept { return data_; }

  std::uint8_t* pixel(int x, int y) noexcept { return data_.data() + 3 * (static_cast<std::size_t>(y) * width_ + x); }
  const std::uint8_t* pixel(int x, int y) const noexcept {
    return data_.data() + 3 * (static_cast<std::size_t>(y) * width_ + x);
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

using GrayMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Luminance in [0, 255], stored as a height x width matrix.
struct GrayImage {
  GrayMatrix values;

  int width() const noexcept { return static_cast<int>(values.cols()); }
  int height() const noexcept { return static_cast<int>(values.rows()); }
  double at(int x, int y) const { return values(y, x); }
};

/// CIELAB (D65) triples, one row per pixel in raster order.
struct LabImage {
  int width = 0;
  int height = 0;
  Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> pixels;

  Eigen::Vector3d at(int x, int y) const { return pixels.row(static_cast<Eigen::Index>(y) * width + x).transpose(); }
};

/// Decodes PNG, binary PPM (P6) or binary PGM (P5). PGM is expanded to three
/// equal channels.
Image load_image(const std::filesystem::path& path);
Image decode_image(const std::vector<std::uint8_t>& bytes);

void save_png(const Image& img, const std::filesystem::path& path);
void save_ppm(const Image& img, const std::filesystem::path& path);

/// Rec. 601 luma: 0.299 R + 0.587 G + 0.114 B.
GrayImage to_grayscale(const Image& img);

Eigen::Vector3d srgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b);
LabImage rgb_to_lab(const Image& img);

}  // namespace vpr
