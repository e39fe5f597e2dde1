#pragma once

#include <algorithm>
#include <array>
#include <span>
#include <vector>

#include "evkit/codec.hpp"
#include "evkit/tensor.hpp"

namespace evkit {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// 2x3 matrix acting on homogeneous (x, y, 1):
///   x' = m[0] x + m[1] y + m[2]
///   y' = m[3] x + m[4] y + m[5]
/// Coordinates are continuous image coordinates: pixel (i, j) covers
/// [i, i + 1) x [j, j + 1) and has its center at (i + 0.5, j + 0.5).
class AffineTransform {
 public:
  static constexpr double kMinDeterminant = 1e-9;

  constexpr AffineTransform() = default;
  explicit constexpr AffineTransform(std::array<double, 6> m) : m_(m) {}

  static AffineTransform identity() { return AffineTransform(); }
  static AffineTransform translation(double tx, double ty);
  static AffineTransform scaling(double sx, double sy);
  /// Counter-clockwise in a y-up frame, i.e. clockwise on screen (y down).
  static AffineTransform rotation(double degrees);
  /// x' = x + tan(sx) y, followed by y' = y + tan(sy) x'.
  static AffineTransform shear(double sx_degrees, double sy_degrees);
  /// Mirror across the vertical line x = width / 2.
  static AffineTransform hflip(double width);

  /// Conjugates `linear` so it acts about `center` instead of the origin.
  static AffineTransform about(const AffineTransform& linear, Point center);

  const std::array<double, 6>& matrix() const noexcept { return m_; }
  double determinant() const noexcept { return m_[0] * m_[4] - m_[1] * m_[3]; }

  Point apply(Point p) const noexcept {
    return {m_[0] * p.x + m_[1] * p.y + m_[2], m_[3] * p.x + m_[4] * p.y + m_[5]};
  }

  /// `this` applied first, then `next`.
  AffineTransform then(const AffineTransform& next) const noexcept;

  /// Throws SingularTransform if |det| <= kMinDeterminant.
  AffineTransform inverse() const;

  friend bool operator==(const AffineTransform&, const AffineTransform&) = default;

 private:
  std::array<double, 6> m_{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};
};

enum class Interpolation { Nearest, Bilinear, Bicubic };

/// Catmull-Rom unless overridden.
inline constexpr double kDefaultBicubicA = -0.5;

/// Integer-factor downscale with pixel-center sampling: destination index d
/// reads source coordinate s = (d + 0.5) * factor - 0.5 on each axis, with edge
/// clamping. Nearest rounds exact halves toward the top-left source pixel.
/// Throws NotDivisible if H or W is not a multiple of `factor`.
RealFrame downscale(const RealFrame& frame, std::size_t factor, Interpolation method,
                    double bicubic_a = kDefaultBicubicA);
RealFrame downscale(const CountFrame& frame, std::size_t factor, Interpolation method,
                    double bicubic_a = kDefaultBicubicA);

/// Cubic convolution kernel with parameter a.
double cubic_kernel(double distance, double a);

template <typename T>
struct Padded {
  Tensor<T> frame;
  std::size_t pad_bottom = 0;
  std::size_t pad_right = 0;
};

/// Zero-pads bottom/right so H and W become multiples of `multiple`.
template <typename T>
Padded<T> pad_to_multiple(const Tensor<T>& frame, std::size_t multiple);

/// Top-left (height, width) region.
template <typename T>
Tensor<T> crop(const Tensor<T>& frame, std::size_t height, std::size_t width);

/// Scales box geometry per axis then adds the pad offsets. Class, score,
/// track and timestamp are preserved.
std::vector<AnnotatedBox> map_boxes(std::span<const AnnotatedBox> boxes, double scale_x,
                                    double scale_y, double offset_x = 0.0, double offset_y = 0.0);

// ---------------------------------------------------------------------------

template <typename T>
Padded<T> pad_to_multiple(const Tensor<T>& frame, std::size_t multiple) {
  if (multiple == 0) multiple = 1;
  const auto round_up = [multiple](std::size_t v) { return (v + multiple - 1) / multiple * multiple; };
  const std::size_t h = round_up(frame.height());
  const std::size_t w = round_up(frame.width());
  Padded<T> out{Tensor<T>(frame.channels(), h, w), h - frame.height(), w - frame.width()};
  for (std::size_t c = 0; c < frame.channels(); ++c) {
    for (std::size_t y = 0; y < frame.height(); ++y) {
      const auto src = frame.channel(c).subspan(y * frame.width(), frame.width());
      std::copy(src.begin(), src.end(), out.frame.channel(c).begin() + static_cast<std::ptrdiff_t>(y * w));
    }
  }
  return out;
}

template <typename T>
Tensor<T> crop(const Tensor<T>& frame, std::size_t height, std::size_t width) {
  height = std::min(height, frame.height());
  width = std::min(width, frame.width());
  Tensor<T> out(frame.channels(), height, width);
  for (std::size_t c = 0; c < frame.channels(); ++c) {
    for (std::size_t y = 0; y < height; ++y) {
      const auto src = frame.channel(c).subspan(y * frame.width(), width);
      std::copy(src.begin(), src.end(), out.channel(c).begin() + static_cast<std::ptrdiff_t>(y * width));
    }
  }
  return out;
}

}  // namespace evkit
