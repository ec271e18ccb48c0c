#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ddrgs {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat34 = Eigen::Matrix<double, 3, 4>;
using Mat23 = Eigen::Matrix<double, 2, 3>;

// Error taxonomy. Everything derives from std::runtime_error or
// std::invalid_argument so callers can catch broadly.

/// Shape or length mismatch between arguments.
struct StructuralError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation (e.g. log of <= 0).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Inconsistent dataset or configuration, detected before any work starts.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed file content. Messages carry file and line where known.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Checkpoint digest, magic or version failure.
struct IntegrityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite values showing up where they must not (NaN gradients etc).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// H x W x 3 raster, row-major, channel-interleaved.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {}

  [[nodiscard]] std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  [[nodiscard]] std::size_t size() const { return data.size(); }
  [[nodiscard]] bool same_shape(const Image& o) const { return width == o.width && height == o.height; }

  double& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  [[nodiscard]] double at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
};

enum class DynamicRange { hdr, ldr };

struct RenderedImage {
  Image pixels;
  DynamicRange range = DynamicRange::hdr;
  std::optional<double> exposure_time;  // present iff range == ldr
  std::string camera_id;
};

inline void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b) || a.data.size() != b.data.size()) {
    throw StructuralError(std::string(what) + ": image dimensions differ (" + std::to_string(a.width) + "x" +
                          std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                          std::to_string(b.height) + ")");
  }
}

}  // namespace ddrgs
