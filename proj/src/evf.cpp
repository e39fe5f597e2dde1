#include "evkit/evf.hpp"

#include <bit>
#include <cstring>

#include <fmt/core.h>

#include "evkit/error.hpp"

namespace evkit {
namespace {

void put_header(Bytes& out, FrameDtype dtype, const Shape3& shape) {
  if (shape.channels > 0xFFFF || shape.height > 0xFFFFFFFFULL || shape.width > 0xFFFFFFFFULL) {
    throw Error(ErrorCode::InvalidArgument, "frame shape does not fit the EVF header");
  }
  out.insert(out.end(), {'E', 'V', 'F', '1'});
  le::put_u8(out, static_cast<std::uint8_t>(dtype));
  le::put_u8(out, 0);
  le::put_u16(out, static_cast<std::uint16_t>(shape.channels));
  le::put_u32(out, static_cast<std::uint32_t>(shape.height));
  le::put_u32(out, static_cast<std::uint32_t>(shape.width));
}

}  // namespace

Bytes encode_evf(const CountFrame& frame) {
  Bytes out;
  out.reserve(kEvfHeaderSize + frame.size() * 2);
  put_header(out, FrameDtype::U16, frame.shape());
  for (const std::uint16_t v : frame.data()) le::put_u16(out, v);
  return out;
}

Bytes encode_evf(const RealFrame& frame) {
  Bytes out;
  out.reserve(kEvfHeaderSize + frame.size() * 4);
  put_header(out, FrameDtype::F32, frame.shape());
  for (const float v : frame.data()) le::put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Bytes encode_evf(const AnyFrame& frame) {
  return std::visit([](const auto& f) { return encode_evf(f); }, frame);
}

AnyFrame decode_evf(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kEvfHeaderSize) {
    throw Error(ErrorCode::TruncatedFile, "EVF header truncated", bytes.size());
  }
  if (std::memcmp(bytes.data(), "EVF", 3) != 0) {
    throw Error(ErrorCode::BadMagic, "not an EVF file", 0);
  }
  if (bytes[3] != '1') {
    throw Error(ErrorCode::VersionUnsupported, "unsupported EVF version", 3);
  }
  const std::uint8_t dtype = bytes[4];
  const Shape3 shape{le::get_u16(bytes.data() + 6), le::get_u32(bytes.data() + 8),
                     le::get_u32(bytes.data() + 12)};
  const std::size_t elem = dtype == 0 ? 2 : dtype == 1 ? 4 : 0;
  if (elem == 0) {
    throw Error(ErrorCode::BadHeader, fmt::format("unknown EVF dtype {}", dtype), 4);
  }
  const std::size_t body = bytes.size() - kEvfHeaderSize;
  if (body != shape.size() * elem) {
    throw Error(body < shape.size() * elem ? ErrorCode::TruncatedFile : ErrorCode::BadHeader,
                fmt::format("EVF body has {} bytes, header implies {}", body, shape.size() * elem),
                bytes.size());
  }
  const std::uint8_t* p = bytes.data() + kEvfHeaderSize;
  if (dtype == 0) {
    CountFrame frame(shape);
    for (auto& v : frame.data()) {
      v = le::get_u16(p);
      p += 2;
    }
    return frame;
  }
  RealFrame frame(shape);
  for (auto& v : frame.data()) {
    v = std::bit_cast<float>(le::get_u32(p));
    p += 4;
  }
  return frame;
}

void write_evf(const std::filesystem::path& path, const AnyFrame& frame) {
  write_file(path, encode_evf(frame));
}

AnyFrame read_evf(const std::filesystem::path& path) { return decode_evf(read_file(path)); }

Shape3 frame_shape(const AnyFrame& frame) {
  return std::visit([](const auto& f) { return f.shape(); }, frame);
}

}  // namespace evkit
