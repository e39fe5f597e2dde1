#pragma once

#include <filesystem>
#include <span>
#include <variant>

#include "evkit/codec.hpp"
#include "evkit/tensor.hpp"

namespace evkit {

// Frame tensor file: 16-byte header
//   "EVF1", u8 dtype (0 = u16, 1 = f32), u8 pad = 0, u16 C, u32 H, u32 W
// followed by C*H*W little-endian values in (C, H, W) row-major order.

inline constexpr std::size_t kEvfHeaderSize = 16;

enum class FrameDtype : std::uint8_t { U16 = 0, F32 = 1 };

using AnyFrame = std::variant<CountFrame, RealFrame>;

Bytes encode_evf(const CountFrame& frame);
Bytes encode_evf(const RealFrame& frame);
Bytes encode_evf(const AnyFrame& frame);

AnyFrame decode_evf(std::span<const std::uint8_t> bytes);

void write_evf(const std::filesystem::path& path, const AnyFrame& frame);
AnyFrame read_evf(const std::filesystem::path& path);

Shape3 frame_shape(const AnyFrame& frame);

}  // namespace evkit
