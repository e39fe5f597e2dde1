#include "evkit/geometry.hpp"

#include <cmath>
#include <numbers>

#include <fmt/core.h>

#include "evkit/error.hpp"

namespace evkit {

AffineTransform AffineTransform::translation(double tx, double ty) {
  return AffineTransform({1.0, 0.0, tx, 0.0, 1.0, ty});
}

AffineTransform AffineTransform::scaling(double sx, double sy) {
  return AffineTransform({sx, 0.0, 0.0, 0.0, sy, 0.0});
}

AffineTransform AffineTransform::rotation(double degrees) {
  const double r = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(r);
  const double s = std::sin(r);
  return AffineTransform({c, -s, 0.0, s, c, 0.0});
}

AffineTransform AffineTransform::shear(double sx_degrees, double sy_degrees) {
  const double kx = std::tan(sx_degrees * std::numbers::pi / 180.0);
  const double ky = std::tan(sy_degrees * std::numbers::pi / 180.0);
  return AffineTransform({1.0, kx, 0.0, ky, 1.0 + kx * ky, 0.0});
}

AffineTransform AffineTransform::hflip(double width) {
  return AffineTransform({-1.0, 0.0, width, 0.0, 1.0, 0.0});
}

AffineTransform AffineTransform::about(const AffineTransform& linear, Point center) {
  return translation(-center.x, -center.y).then(linear).then(translation(center.x, center.y));
}

AffineTransform AffineTransform::then(const AffineTransform& next) const noexcept {
  const auto& a = next.m_;
  const auto& b = m_;
  return AffineTransform({a[0] * b[0] + a[1] * b[3], a[0] * b[1] + a[1] * b[4],
                          a[0] * b[2] + a[1] * b[5] + a[2], a[3] * b[0] + a[4] * b[3],
                          a[3] * b[1] + a[4] * b[4], a[3] * b[2] + a[4] * b[5] + a[5]});
}

AffineTransform AffineTransform::inverse() const {
  const double det = determinant();
  if (!(std::abs(det) > kMinDeterminant)) {
    throw Error(ErrorCode::SingularTransform, fmt::format("affine determinant {} is singular", det));
  }
  const double inv = 1.0 / det;
  const double a = m_[4] * inv;
  const double b = -m_[1] * inv;
  const double c = -m_[3] * inv;
  const double d = m_[0] * inv;
  return AffineTransform({a, b, -(a * m_[2] + b * m_[5]), c, d, -(c * m_[2] + d * m_[5])});
}

double cubic_kernel(double distance, double a) {
  const double t = std::abs(distance);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

namespace {

struct Tap {
  std::size_t index;
  double weight;
};

/// Per-destination source taps along one axis.
std::vector<std::vector<Tap>> axis_taps(std::size_t src_len, std::size_t factor,
                                        Interpolation method, double a) {
  const std::size_t dst_len = src_len / factor;
  const auto last = static_cast<std::ptrdiff_t>(src_len) - 1;
  const auto clamp = [last](std::ptrdiff_t i) {
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, last));
  };
  std::vector<std::vector<Tap>> taps(dst_len);
  for (std::size_t d = 0; d < dst_len; ++d) {
    const double s = (static_cast<double>(d) + 0.5) * static_cast<double>(factor) - 0.5;
    auto& out = taps[d];
    switch (method) {
      case Interpolation::Nearest:
        out.push_back({clamp(static_cast<std::ptrdiff_t>(std::ceil(s - 0.5))), 1.0});
        break;
      case Interpolation::Bilinear: {
        const double base = std::floor(s);
        const double frac = s - base;
        const auto i0 = static_cast<std::ptrdiff_t>(base);
        out.push_back({clamp(i0), 1.0 - frac});
        out.push_back({clamp(i0 + 1), frac});
        break;
      }
      case Interpolation::Bicubic: {
        const double base = std::floor(s);
        const double frac = s - base;
        const auto i0 = static_cast<std::ptrdiff_t>(base);
        for (std::ptrdiff_t k = -1; k <= 2; ++k) {
          out.push_back({clamp(i0 + k), cubic_kernel(static_cast<double>(k) - frac, a)});
        }
        break;
      }
    }
  }
  return taps;
}

}  // namespace

RealFrame downscale(const RealFrame& frame, std::size_t factor, Interpolation method,
                    double bicubic_a) {
  if (factor == 0 || frame.height() % factor != 0 || frame.width() % factor != 0) {
    throw Error(ErrorCode::NotDivisible,
                fmt::format("frame {}x{} is not divisible by factor {}", frame.height(),
                            frame.width(), factor));
  }
  const std::size_t h = frame.height();
  const std::size_t w = frame.width();
  const std::size_t oh = h / factor;
  const std::size_t ow = w / factor;
  const auto x_taps = axis_taps(w, factor, method, bicubic_a);
  const auto y_taps = axis_taps(h, factor, method, bicubic_a);

  RealFrame out(frame.channels(), oh, ow);
  std::vector<double> rows(h * ow);
  for (std::size_t c = 0; c < frame.channels(); ++c) {
    const auto src = frame.channel(c);
    for (std::size_t y = 0; y < h; ++y) {
      const float* row = src.data() + y * w;
      for (std::size_t x = 0; x < ow; ++x) {
        double acc = 0.0;
        for (const Tap& t : x_taps[x]) acc += t.weight * row[t.index];
        rows[y * ow + x] = acc;
      }
    }
    auto dst = out.channel(c);
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        double acc = 0.0;
        for (const Tap& t : y_taps[y]) acc += t.weight * rows[t.index * ow + x];
        dst[y * ow + x] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

RealFrame downscale(const CountFrame& frame, std::size_t factor, Interpolation method,
                    double bicubic_a) {
  return downscale(tensor_cast<float>(frame), factor, method, bicubic_a);
}

std::vector<AnnotatedBox> map_boxes(std::span<const AnnotatedBox> boxes, double scale_x,
                                    double scale_y, double offset_x, double offset_y) {
  if (!(scale_x > 0.0) || !(scale_y > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "box scale must be positive");
  }
  std::vector<AnnotatedBox> out(boxes.begin(), boxes.end());
  for (auto& b : out) {
    b.x = static_cast<float>(b.x * scale_x + offset_x);
    b.y = static_cast<float>(b.y * scale_y + offset_y);
    b.w = static_cast<float>(b.w * scale_x);
    b.h = static_cast<float>(b.h * scale_y);
  }
  return out;
}

}  // namespace evkit
