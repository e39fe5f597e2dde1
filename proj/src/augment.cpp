#include "evkit/augment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include <fmt/core.h>

#include "evkit/error.hpp"

namespace evkit {

AugmentConfig AugmentConfig::none() {
  AugmentConfig cfg;
  cfg.hflip_p = 0.0;
  cfg.rotation_p = 0.0;
  cfg.translation_p = 0.0;
  cfg.scale_p = 0.0;
  cfg.shear_p = 0.0;
  cfg.erasure_p = 0.0;
  return cfg;
}

void validate(const AugmentConfig& cfg) {
  const auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::ConfigError, fmt::format("{} probability {} outside [0, 1]", name, p));
    }
  };
  const auto range = [](Range r, const char* name) {
    if (!(r.lo <= r.hi)) {
      throw Error(ErrorCode::ConfigError,
                  fmt::format("{} range ({}, {}) has lower > upper", name, r.lo, r.hi));
    }
  };
  prob(cfg.hflip_p, "hflip");
  prob(cfg.rotation_p, "rotation");
  prob(cfg.translation_p, "translation");
  prob(cfg.scale_p, "scale");
  prob(cfg.shear_p, "shear");
  prob(cfg.erasure_p, "erasure");
  range(cfg.rotation_deg, "rotation");
  range(cfg.translation_frac, "translation");
  range(cfg.scale, "scale");
  range(cfg.shear_deg, "shear");
  range(cfg.erasure_area, "erasure area");
  range(cfg.erasure_ratio, "erasure ratio");
  if (!(cfg.scale.lo > 0.0)) {
    throw Error(ErrorCode::ConfigError, "scale range must be positive");
  }
  if (!(cfg.erasure_ratio.lo > 0.0) || !(cfg.erasure_area.lo > 0.0) || cfg.erasure_area.hi > 1.0) {
    throw Error(ErrorCode::ConfigError, "erasure area must lie in (0, 1] and ratio must be positive");
  }
  if (!(std::abs(cfg.shear_deg.lo) < 90.0 && std::abs(cfg.shear_deg.hi) < 90.0)) {
    throw Error(ErrorCode::ConfigError, "shear angles must lie strictly inside (-90, 90)");
  }
}

GeometricDraw sample_geometric(const AugmentConfig& cfg, ImageSize size, Rng rng) {
  GeometricDraw draw;
  const Point center = size.center();
  AffineTransform m;

  // Every stage draws its flag in table order; magnitudes only when applied.
  draw.hflip = rng.bernoulli(cfg.hflip_p);
  if (draw.hflip) {
    m = m.then(AffineTransform::hflip(static_cast<double>(size.width)));
  }
  if (rng.bernoulli(cfg.rotation_p)) {
    draw.rotation_deg = rng.uniform(cfg.rotation_deg.lo, cfg.rotation_deg.hi);
    m = m.then(AffineTransform::about(AffineTransform::rotation(*draw.rotation_deg), center));
  }
  if (rng.bernoulli(cfg.translation_p)) {
    const double fx = rng.uniform(cfg.translation_frac.lo, cfg.translation_frac.hi);
    const double fy = rng.uniform(cfg.translation_frac.lo, cfg.translation_frac.hi);
    draw.translation_px = Point{fx * static_cast<double>(size.width),
                                fy * static_cast<double>(size.height)};
    m = m.then(AffineTransform::translation(draw.translation_px->x, draw.translation_px->y));
  }
  if (rng.bernoulli(cfg.scale_p)) {
    draw.scale = rng.uniform(cfg.scale.lo, cfg.scale.hi);
    m = m.then(AffineTransform::about(AffineTransform::scaling(*draw.scale, *draw.scale), center));
  }
  if (rng.bernoulli(cfg.shear_p)) {
    const double sx = rng.uniform(cfg.shear_deg.lo, cfg.shear_deg.hi);
    const double sy = rng.uniform(cfg.shear_deg.lo, cfg.shear_deg.hi);
    draw.shear_deg = Point{sx, sy};
    m = m.then(AffineTransform::about(AffineTransform::shear(sx, sy), center));
  }
  draw.transform = m;
  return draw;
}

std::optional<EraseRect> sample_erasure(const AugmentConfig& cfg, ImageSize size, Rng rng) {
  if (!rng.bernoulli(cfg.erasure_p)) {
    return std::nullopt;
  }
  const double area = static_cast<double>(size.width * size.height);
  const double log_lo = std::log(cfg.erasure_ratio.lo);
  const double log_hi = std::log(cfg.erasure_ratio.hi);
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double target = area * rng.uniform(cfg.erasure_area.lo, cfg.erasure_area.hi);
    const double ratio = std::exp(rng.uniform(log_lo, log_hi));
    const auto h = static_cast<std::size_t>(std::llround(std::sqrt(target * ratio)));
    const auto w = static_cast<std::size_t>(std::llround(std::sqrt(target / ratio)));
    if (h == 0 || w == 0 || h >= size.height || w >= size.width) {
      continue;
    }
    const auto y = static_cast<std::size_t>(rng.below(size.height - h + 1));
    const auto x = static_cast<std::size_t>(rng.below(size.width - w + 1));
    return EraseRect{x, y, w, h};
  }
  return std::nullopt;
}

SampledAugmentation sample_augmentation(const AugmentConfig& cfg, ImageSize size, const Rng& rng) {
  SampledAugmentation aug;
  aug.size = size;
  aug.geometric = sample_geometric(cfg, size, rng.split(kGeometricStream));
  aug.erasure = sample_erasure(cfg, size, rng.split(kErasureStream).split(0));
  return aug;
}

namespace {

template <typename T>
T convert_sample(double v) {
  if constexpr (std::is_integral_v<T>) {
    const double r = std::round(v);
    if (r <= 0.0) return T{0};
    if (r >= static_cast<double>(std::numeric_limits<T>::max())) return std::numeric_limits<T>::max();
    return static_cast<T>(r);
  } else {
    return static_cast<T>(v);
  }
}

struct BilinearTap {
  std::ptrdiff_t x0;
  std::ptrdiff_t y0;
  double fx;
  double fy;
};

}  // namespace

template <typename T>
Tensor<T> apply_to_frame(const Tensor<T>& frame, const SampledAugmentation& aug, float fill) {
  const std::size_t h = frame.height();
  const std::size_t w = frame.width();
  Tensor<T> out = frame;

  if (!aug.geometric.is_identity()) {
    const AffineTransform inv = aug.geometric.transform.inverse();
    std::vector<BilinearTap> taps(h * w);
    for (std::size_t v = 0; v < h; ++v) {
      for (std::size_t u = 0; u < w; ++u) {
        const Point src = inv.apply({static_cast<double>(u) + 0.5, static_cast<double>(v) + 0.5});
        const double sx = src.x - 0.5;
        const double sy = src.y - 0.5;
        const double bx = std::floor(sx);
        const double by = std::floor(sy);
        // Far outside coordinates are clamped so the integer cast stays defined.
        const double lim = static_cast<double>(std::max(h, w)) + 2.0;
        taps[v * w + u] = {static_cast<std::ptrdiff_t>(std::clamp(bx, -lim, lim)),
                           static_cast<std::ptrdiff_t>(std::clamp(by, -lim, lim)), sx - bx, sy - by};
      }
    }
    const auto iw = static_cast<std::ptrdiff_t>(w);
    const auto ih = static_cast<std::ptrdiff_t>(h);
    for (std::size_t c = 0; c < frame.channels(); ++c) {
      const auto src = frame.channel(c);
      auto dst = out.channel(c);
      const auto at = [&](std::ptrdiff_t x, std::ptrdiff_t y) -> double {
        if (x < 0 || y < 0 || x >= iw || y >= ih) return 0.0;
        return static_cast<double>(src[static_cast<std::size_t>(y * iw + x)]);
      };
      for (std::size_t i = 0; i < taps.size(); ++i) {
        const BilinearTap& t = taps[i];
        const double top = (1.0 - t.fx) * at(t.x0, t.y0) + t.fx * at(t.x0 + 1, t.y0);
        const double bottom = (1.0 - t.fx) * at(t.x0, t.y0 + 1) + t.fx * at(t.x0 + 1, t.y0 + 1);
        dst[i] = convert_sample<T>((1.0 - t.fy) * top + t.fy * bottom);
      }
    }
  }

  if (aug.erasure) {
    const EraseRect& r = *aug.erasure;
    const T value = convert_sample<T>(static_cast<double>(fill));
    for (std::size_t c = 0; c < out.channels(); ++c) {
      for (std::size_t y = r.y; y < std::min(h, r.y + r.h); ++y) {
        for (std::size_t x = r.x; x < std::min(w, r.x + r.w); ++x) {
          out(c, y, x) = value;
        }
      }
    }
  }
  return out;
}

template CountFrame apply_to_frame(const CountFrame&, const SampledAugmentation&, float);
template RealFrame apply_to_frame(const RealFrame&, const SampledAugmentation&, float);

std::vector<AnnotatedBox> apply_to_boxes(std::span<const AnnotatedBox> boxes,
                                         const SampledAugmentation& aug, BoxFilter filter) {
  std::vector<AnnotatedBox> out;
  out.reserve(boxes.size());
  if (aug.geometric.is_identity()) {
    out.assign(boxes.begin(), boxes.end());
    return out;
  }
  const AffineTransform& m = aug.geometric.transform;
  if (!(std::abs(m.determinant()) > AffineTransform::kMinDeterminant)) {
    throw Error(ErrorCode::SingularTransform, "augmentation transform is singular");
  }
  const double width = static_cast<double>(aug.size.width);
  const double height = static_cast<double>(aug.size.height);
  for (const AnnotatedBox& b : boxes) {
    const double x0 = b.x;
    const double y0 = b.y;
    const double x1 = b.x + b.w;
    const double y1 = b.y + b.h;
    const Point corners[4] = {m.apply({x0, y0}), m.apply({x1, y0}), m.apply({x0, y1}),
                              m.apply({x1, y1})};
    double lx = corners[0].x, hx = corners[0].x, ly = corners[0].y, hy = corners[0].y;
    for (const Point& p : corners) {
      lx = std::min(lx, p.x);
      hx = std::max(hx, p.x);
      ly = std::min(ly, p.y);
      hy = std::max(hy, p.y);
    }
    const double full = (hx - lx) * (hy - ly);
    const double cx0 = std::clamp(lx, 0.0, width);
    const double cx1 = std::clamp(hx, 0.0, width);
    const double cy0 = std::clamp(ly, 0.0, height);
    const double cy1 = std::clamp(hy, 0.0, height);
    const double clipped = (cx1 - cx0) * (cy1 - cy0);
    if (!(clipped >= filter.min_area) || !(full > 0.0) || clipped / full < filter.min_visibility) {
      continue;
    }
    AnnotatedBox t = b;
    t.x = static_cast<float>(cx0);
    t.y = static_cast<float>(cy0);
    t.w = static_cast<float>(cx1 - cx0);
    t.h = static_cast<float>(cy1 - cy0);
    out.push_back(t);
  }
  return out;
}

template <typename T>
AugmentedClip<T> augment_clip(std::span<const Tensor<T>> frames,
                              std::span<const std::vector<AnnotatedBox>> boxes,
                              const AugmentConfig& cfg, const Rng& rng) {
  if (frames.empty()) {
    throw Error(ErrorCode::InvalidArgument, "cannot augment an empty clip");
  }
  if (!boxes.empty() && boxes.size() != frames.size()) {
    throw Error(ErrorCode::ShapeMismatch,
                fmt::format("clip has {} frames but {} box lists", frames.size(), boxes.size()));
  }
  const Shape3 shape = frames.front().shape();
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (frames[k].shape() != shape) {
      throw Error(ErrorCode::ShapeMismatch, fmt::format("frame {} shape differs from frame 0", k), k);
    }
  }
  const ImageSize size{shape.width, shape.height};
  const GeometricDraw geometric = sample_geometric(cfg, size, rng.split(kGeometricStream));
  const Rng erasure_root = rng.split(kErasureStream);
  const BoxFilter filter{cfg.min_box_area, cfg.min_box_visibility};

  AugmentedClip<T> clip;
  clip.frames.reserve(frames.size());
  clip.boxes.reserve(frames.size());
  clip.draws.reserve(frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    SampledAugmentation aug;
    aug.size = size;
    aug.geometric = geometric;
    aug.erasure = sample_erasure(cfg, size, erasure_root.split(k));
    clip.frames.push_back(apply_to_frame(frames[k], aug, cfg.erasure_fill));
    clip.boxes.push_back(boxes.empty() ? std::vector<AnnotatedBox>{}
                                       : apply_to_boxes(boxes[k], aug, filter));
    clip.draws.push_back(std::move(aug));
  }
  return clip;
}

template AugmentedClip<std::uint16_t> augment_clip(std::span<const CountFrame>,
                                                   std::span<const std::vector<AnnotatedBox>>,
                                                   const AugmentConfig&, const Rng&);
template AugmentedClip<float> augment_clip(std::span<const RealFrame>,
                                           std::span<const std::vector<AnnotatedBox>>,
                                           const AugmentConfig&, const Rng&);

std::string format_geometric(const GeometricDraw& d) {
  const auto& m = d.transform.matrix();
  std::string s = fmt::format("hflip={}", d.hflip ? 1 : 0);
  s += d.rotation_deg ? fmt::format(" rotate={}", *d.rotation_deg) : std::string(" rotate=-");
  s += d.translation_px ? fmt::format(" translate={},{}", d.translation_px->x, d.translation_px->y)
                        : std::string(" translate=-");
  s += d.scale ? fmt::format(" scale={}", *d.scale) : std::string(" scale=-");
  s += d.shear_deg ? fmt::format(" shear={},{}", d.shear_deg->x, d.shear_deg->y)
                   : std::string(" shear=-");
  s += fmt::format(" matrix={},{},{},{},{},{}", m[0], m[1], m[2], m[3], m[4], m[5]);
  return s;
}

std::string format_erasure(const std::optional<EraseRect>& r) {
  if (!r) return "erase=-";
  return fmt::format("erase={},{},{},{}", r->x, r->y, r->w, r->h);
}

}  // namespace evkit
