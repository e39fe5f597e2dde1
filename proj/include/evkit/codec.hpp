#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evkit/event.hpp"

namespace evkit {

using Bytes = std::vector<std::uint8_t>;

struct RecordingHeader {
  SensorGeometry geometry;
  std::uint64_t event_count = 0;
  int format_version = 0;
};

// ---------------------------------------------------------------------------
// DAT 2.0: optional '%' comment lines, then u8 event_type, u8 event_size (= 8),
// then 8-byte records of two little-endian u32:
//   word0 = timestamp (us)
//   word1 = x (bits 0-13) | y (bits 14-27) | polarity (bits 28-31, nonzero => 1)
// ---------------------------------------------------------------------------

inline constexpr std::size_t kDatRecordSize = 8;

struct DatHeader {
  std::optional<SensorGeometry> geometry;  // from "% Width"/"% Height" or "% geometry WxH"
  int version = 2;
  std::uint8_t event_type = 0;
  std::size_t body_offset = 0;
};

/// Parses the comment block and the two type/size bytes.
DatHeader read_dat_header(std::span<const std::uint8_t> bytes);

/// Decodes a whole DAT blob. `fallback` supplies the geometry when the header
/// carries none; BadHeader if neither does.
EventStream decode_dat(std::span<const std::uint8_t> bytes,
                       std::optional<SensorGeometry> fallback = std::nullopt);

/// Writes a DAT blob with Width/Height/Version comment lines.
Bytes encode_dat(const EventStream& stream);

// ---------------------------------------------------------------------------
// EVS: "EVS1", u32 width, u32 height, u64 event_count, then per event
// u64 t, u16 x, u16 y, u8 p, u8 reserved, 2 zero pad bytes (16-byte stride).
// All little-endian.
// ---------------------------------------------------------------------------

inline constexpr std::size_t kEvsHeaderSize = 20;
inline constexpr std::size_t kEvsRecordSize = 16;

Bytes encode_evs(const EventStream& stream);
RecordingHeader read_evs_header(std::span<const std::uint8_t> bytes);
EventStream decode_evs(std::span<const std::uint8_t> bytes);

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Sniffs the EVS magic; anything else is decoded as DAT.
EventStream read_recording(const std::filesystem::path& path,
                           std::optional<SensorGeometry> fallback = std::nullopt);

// ---------------------------------------------------------------------------
// Annotations: one record per line,
//   t=<u64> x=<f32> y=<f32> w=<f32> h=<f32> class=<u8> score=<f32> track=<i64|->
// Blank lines and lines starting with '#' are skipped.
// ---------------------------------------------------------------------------

struct AnnotatedBox {
  Micros t = 0;
  float x = 0.0F;  // top-left corner
  float y = 0.0F;
  float w = 0.0F;
  float h = 0.0F;
  std::uint8_t class_id = 0;
  float score = 1.0F;
  std::optional<std::int64_t> track_id;

  friend bool operator==(const AnnotatedBox&, const AnnotatedBox&) = default;
};

/// Gen1: car=0, pedestrian=1. Gen4 adds two-wheeler=2.
enum class ObjectClass : std::uint8_t { Car = 0, Pedestrian = 1, TwoWheeler = 2 };

std::string format_annotation(const AnnotatedBox& box);

/// Throws ParseError with `line_number` as the error index.
AnnotatedBox parse_annotation(std::string_view line, std::size_t line_number = 1);

/// Returns boxes stably sorted by t.
std::vector<AnnotatedBox> read_annotations(std::istream& in);
std::vector<AnnotatedBox> read_annotations(const std::filesystem::path& path);

void write_annotations(std::ostream& out, std::span<const AnnotatedBox> boxes);
void write_annotations(const std::filesystem::path& path, std::span<const AnnotatedBox> boxes);

// Little-endian helpers shared by every binary format in the toolkit.
namespace le {

inline void put_u8(Bytes& out, std::uint8_t v) { out.push_back(v); }

inline void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(Bytes& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

inline void put_u64(Bytes& out, std::uint64_t v) {
  for (int s = 0; s < 64; s += 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

inline std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint64_t get_u64(const std::uint8_t* p) {
  return static_cast<std::uint64_t>(get_u32(p)) |
         (static_cast<std::uint64_t>(get_u32(p + 4)) << 32);
}

}  // namespace le

}  // namespace evkit
