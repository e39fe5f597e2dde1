#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evkit/codec.hpp"
#include "evkit/geometry.hpp"
#include "evkit/rng.hpp"
#include "evkit/tensor.hpp"

namespace evkit {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Defaults reproduce the training chain: flip 0.5; rotation, translation,
/// scale, shear 0.6 each; erasure 0.4.
struct AugmentConfig {
  double hflip_p = 0.5;

  double rotation_p = 0.6;
  Range rotation_deg{-30.0, 30.0};

  double translation_p = 0.6;
  /// Fraction of the image width/height, drawn independently per axis.
  Range translation_frac{-0.5, 0.5};

  double scale_p = 0.6;
  Range scale{0.5, 1.5};

  double shear_p = 0.6;
  /// Drawn independently for the x and y shear angles.
  Range shear_deg{-30.0, 30.0};

  double erasure_p = 0.4;
  Range erasure_area{0.02, 0.33};
  Range erasure_ratio{0.3, 3.3};
  float erasure_fill = 0.0F;

  double min_box_area = 4.0;
  double min_box_visibility = 0.1;

  /// All stages off.
  static AugmentConfig none();
};

/// Throws ConfigError on probabilities outside [0, 1], inverted ranges, or
/// non-positive scale/ratio/area bounds.
void validate(const AugmentConfig& cfg);

struct ImageSize {
  std::size_t width = 0;
  std::size_t height = 0;

  Point center() const noexcept {
    return {static_cast<double>(width) / 2.0, static_cast<double>(height) / 2.0};
  }
};

struct EraseRect {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t w = 0;
  std::size_t h = 0;

  friend bool operator==(const EraseRect&, const EraseRect&) = default;
};

/// Drawn geometric parameters. Unapplied stages are empty.
struct GeometricDraw {
  bool hflip = false;
  std::optional<double> rotation_deg;
  std::optional<Point> translation_px;
  std::optional<double> scale;
  std::optional<Point> shear_deg;  // (x, y)
  AffineTransform transform;       // hflip -> rotate -> translate -> scale -> shear, about the center

  bool is_identity() const noexcept { return transform == AffineTransform::identity(); }
};

struct SampledAugmentation {
  ImageSize size;
  GeometricDraw geometric;
  std::optional<EraseRect> erasure;
};

/// Substream ids: geometric parameters and per-frame erasure draws never share
/// a stream, so clip length cannot perturb the geometric draw.
inline constexpr std::uint64_t kGeometricStream = 1;
inline constexpr std::uint64_t kErasureStream = 2;

GeometricDraw sample_geometric(const AugmentConfig& cfg, ImageSize size, Rng rng);

/// torchvision-style random erasing: up to 10 attempts at an area fraction and
/// log-uniform aspect ratio that fit inside the image; nothing if all fail.
std::optional<EraseRect> sample_erasure(const AugmentConfig& cfg, ImageSize size, Rng rng);

/// Frame mode: geometric from rng.split(kGeometricStream), erasure from
/// rng.split(kErasureStream).split(0).
SampledAugmentation sample_augmentation(const AugmentConfig& cfg, ImageSize size, const Rng& rng);

/// Inverse-mapped warp with bilinear sampling (zero outside the source), then
/// the erasure rectangle is filled in every channel. Integer frames are rounded
/// to nearest and saturated.
template <typename T>
Tensor<T> apply_to_frame(const Tensor<T>& frame, const SampledAugmentation& aug,
                         float fill = 0.0F);

struct BoxFilter {
  double min_area = 4.0;
  double min_visibility = 0.1;
};

/// Axis-aligned hull of each transformed box, clipped to the image. Boxes with
/// clipped area < min_area or clipped/unclipped area < min_visibility are
/// dropped. Erasure never touches boxes.
std::vector<AnnotatedBox> apply_to_boxes(std::span<const AnnotatedBox> boxes,
                                         const SampledAugmentation& aug, BoxFilter filter = {});

template <typename T>
struct AugmentedClip {
  std::vector<Tensor<T>> frames;
  std::vector<std::vector<AnnotatedBox>> boxes;
  std::vector<SampledAugmentation> draws;  // one per frame; geometric part shared
};

/// Video mode: one geometric draw for the whole clip, a fresh erasure draw per
/// frame k from rng.split(kErasureStream).split(k).
template <typename T>
AugmentedClip<T> augment_clip(std::span<const Tensor<T>> frames,
                              std::span<const std::vector<AnnotatedBox>> boxes,
                              const AugmentConfig& cfg, const Rng& rng);

/// Single-line log record of a draw.
std::string format_geometric(const GeometricDraw& draw);
std::string format_erasure(const std::optional<EraseRect>& rect);

}  // namespace evkit
