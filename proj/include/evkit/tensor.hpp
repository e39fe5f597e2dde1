#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace evkit {

struct Shape3 {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t plane() const noexcept { return height * width; }
  std::size_t size() const noexcept { return channels * height * width; }

  friend bool operator==(const Shape3&, const Shape3&) = default;
};

/// Dense (C, H, W) row-major tensor.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape3 shape, T fill = T{}) : shape_(shape), data_(shape.size(), fill) {}
  Tensor(std::size_t c, std::size_t h, std::size_t w, T fill = T{})
      : Tensor(Shape3{c, h, w}, fill) {}

  const Shape3& shape() const noexcept { return shape_; }
  std::size_t channels() const noexcept { return shape_.channels; }
  std::size_t height() const noexcept { return shape_.height; }
  std::size_t width() const noexcept { return shape_.width; }
  std::size_t size() const noexcept { return data_.size(); }

  std::size_t offset(std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return (c * shape_.height + y) * shape_.width + x;
  }

  T& operator()(std::size_t c, std::size_t y, std::size_t x) noexcept { return data_[offset(c, y, x)]; }
  const T& operator()(std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return data_[offset(c, y, x)];
  }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  std::span<T> channel(std::size_t c) noexcept {
    return std::span<T>(data_).subspan(c * shape_.plane(), shape_.plane());
  }
  std::span<const T> channel(std::size_t c) const noexcept {
    return std::span<const T>(data_).subspan(c * shape_.plane(), shape_.plane());
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape3 shape_{};
  std::vector<T> data_;
};

/// Event counts; saturating at 65535.
using CountFrame = Tensor<std::uint16_t>;
/// Real-valued frames: resampled counts, time surfaces, feature maps.
using RealFrame = Tensor<float>;

template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& in) {
  Tensor<To> out(in.shape());
  auto src = in.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<To>(src[i]);
  return out;
}

}  // namespace evkit
