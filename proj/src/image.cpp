#include "vpr/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "vpr/error.hpp"

namespace vpr {

Image::Image(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < kMinImageSide || height < kMinImageSide) {
    throw Error(ErrorCode::ImageTooSmall,
                std::to_string(width) + "x" + std::to_string(height) + " is below the " +
                    std::to_string(kMinImageSide) + " pixel minimum");
  }
  if (data_.size() != static_cast<std::size_t>(width) * height * 3) {
    throw Error(ErrorCode::InvalidParams, "pixel buffer size does not match image dimensions");
  }
}

Image::Image(int width, int height)
    : Image(width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                                     std::max(height, 0) * 3)) {}

namespace {

bool is_png(const std::vector<std::uint8_t>& bytes) {
  static constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= 8 && std::memcmp(bytes.data(), kSig, 8) == 0;
}

Image decode_png(const std::vector<std::uint8_t>& bytes) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    std::string msg = png.message;
    png_image_free(&png);
    throw Error(ErrorCode::CorruptFile, "png header: " + msg);
  }
  png.format = PNG_FORMAT_RGB;
  const int w = static_cast<int>(png.width);
  const int h = static_cast<int>(png.height);
  std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, data.data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    throw Error(ErrorCode::CorruptFile, "png data: " + msg);
  }
  png_image_free(&png);
  return Image(w, h, std::move(data));
}

// Netpbm header: magic, width, height, maxval separated by whitespace with
// '#' comments, then exactly one whitespace byte before the raster.
Image decode_netpbm(const std::vector<std::uint8_t>& bytes) {
  const bool gray = bytes[1] == '5';
  std::size_t pos = 2;
  auto next_int = [&]() -> long {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
      throw Error(ErrorCode::CorruptFile, "malformed netpbm header");
    }
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > (1L << 30)) throw Error(ErrorCode::CorruptFile, "netpbm header value out of range");
      ++pos;
    }
    return v;
  };
  const long w = next_int();
  const long h = next_int();
  const long maxval = next_int();
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw Error(ErrorCode::CorruptFile, "malformed netpbm header");
  }
  ++pos;
  if (maxval <= 0 || maxval > 65535) throw Error(ErrorCode::CorruptFile, "invalid netpbm maxval");
  if (w < kMinImageSide || h < kMinImageSide) {
    throw Error(ErrorCode::ImageTooSmall, std::to_string(w) + "x" + std::to_string(h));
  }
  const std::size_t channels = gray ? 1 : 3;
  const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
  const std::size_t samples = static_cast<std::size_t>(w) * h * channels;
  if (bytes.size() - pos < samples * sample_bytes) {
    throw Error(ErrorCode::CorruptFile, "truncated netpbm raster");
  }
  std::vector<std::uint8_t> data(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < samples; ++i) {
    long v = sample_bytes == 2 ? (bytes[pos + 2 * i] << 8) | bytes[pos + 2 * i + 1] : bytes[pos + i];
    if (v > maxval) throw Error(ErrorCode::CorruptFile, "netpbm sample exceeds maxval");
    const auto s = static_cast<std::uint8_t>(maxval == 255 ? v : std::lround(255.0 * v / maxval));
    if (gray) {
      data[3 * i] = data[3 * i + 1] = data[3 * i + 2] = s;
    } else {
      data[i] = s;
    }
  }
  return Image(static_cast<int>(w), static_cast<int>(h), std::move(data));
}

}  // namespace

Image decode_image(const std::vector<std::uint8_t>& bytes) {
  if (is_png(bytes)) return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
    return decode_netpbm(bytes);
  }
  throw Error(ErrorCode::UnsupportedFormat, "expected PNG, P5 or P6 data");
}

Image load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_image(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + std::string(e.what()));
  }
}

void save_png(const Image& img, const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width());
  png.height = static_cast<png_uint_32>(img.height());
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, img.data().data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    throw Error(ErrorCode::IoError, "writing " + path.string() + ": " + msg);
  }
  png_image_free(&png);
}

void save_ppm(const Image& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data().data()), static_cast<std::streamsize>(img.data().size()));
}

GrayImage to_grayscale(const Image& img) {
  GrayImage g;
  g.values.resize(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const std::uint8_t* p = img.pixel(x, y);
      g.values(y, x) = std::clamp(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2], 0.0, 255.0);
    }
  }
  return g;
}

namespace {

double srgb_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

}  // namespace

Eigen::Vector3d srgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const Eigen::Vector3d rgb(srgb_linear(r / 255.0), srgb_linear(g / 255.0), srgb_linear(b / 255.0));
  Eigen::Matrix3d m;
  m << 0.4124564, 0.3575761, 0.1804375,
       0.2126729, 0.7151522, 0.0721750,
       0.0193339, 0.1191920, 0.9503041;
  const Eigen::Vector3d xyz = m * rgb;
  const double fx = lab_f(xyz.x() / 0.95047);
  const double fy = lab_f(xyz.y() / 1.0);
  const double fz = lab_f(xyz.z() / 1.08883);
  return {std::clamp(116.0 * fy - 16.0, 0.0, 100.0), 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

LabImage rgb_to_lab(const Image& img) {
  LabImage lab;
  lab.width = img.width();
  lab.height = img.height();
  lab.pixels.resize(static_cast<Eigen::Index>(img.pixel_count()), 3);
  const auto& d = img.data();
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    lab.pixels.row(static_cast<Eigen::Index>(i)) = srgb_to_lab(d[3 * i], d[3 * i + 1], d[3 * i + 2]).transpose();
  }
  return lab;
}

}  // namespace vpr
