#include "evkit/codec.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/core.h>

#include "evkit/error.hpp"

namespace evkit {
namespace {

constexpr std::array<char, 4> kEvsMagic{'E', 'V', 'S', '1'};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  text = trim(text);
  if (text.empty()) return false;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  if constexpr (std::is_floating_point_v<T>) {
    if (*first == '+') ++first;
  }
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

std::uint32_t header_dimension(std::string_view value, std::size_t offset) {
  std::uint32_t v = 0;
  if (!parse_number(value, v) || v == 0) {
    throw Error(ErrorCode::BadHeader,
                fmt::format("bad dimension '{}' in DAT header at byte {}", value, offset), offset);
  }
  return v;
}

}  // namespace

DatHeader read_dat_header(std::span<const std::uint8_t> bytes) {
  DatHeader header;
  std::optional<std::uint32_t> width;
  std::optional<std::uint32_t> height;
  std::size_t pos = 0;
  while (pos < bytes.size() && bytes[pos] == '%') {
    const auto* begin = bytes.data() + pos;
    const auto* nl = static_cast<const std::uint8_t*>(std::memchr(begin, '\n', bytes.size() - pos));
    if (nl == nullptr) {
      throw Error(ErrorCode::TruncatedFile,
                  fmt::format("unterminated DAT header line at byte {}", pos), pos);
    }
    const std::string_view line(reinterpret_cast<const char*>(begin + 1),
                                static_cast<std::size_t>(nl - begin - 1));
    const std::string_view body = trim(line);
    const auto space = body.find_first_of(" \t");
    if (space != std::string_view::npos) {
      const std::string key = lower(body.substr(0, space));
      const std::string_view value = trim(body.substr(space + 1));
      if (key == "width") {
        width = header_dimension(value, pos);
      } else if (key == "height") {
        height = header_dimension(value, pos);
      } else if (key == "geometry") {
        const auto sep = value.find('x');
        if (sep == std::string_view::npos) {
          throw Error(ErrorCode::BadHeader, fmt::format("bad geometry '{}' at byte {}", value, pos),
                      pos);
        }
        width = header_dimension(value.substr(0, sep), pos);
        height = header_dimension(value.substr(sep + 1), pos);
      } else if (key == "version") {
        int v = 0;
        if (!parse_number(value, v)) {
          throw Error(ErrorCode::BadHeader, fmt::format("bad version '{}' at byte {}", value, pos),
                      pos);
        }
        header.version = v;
      }
    }
    pos = static_cast<std::size_t>(nl - bytes.data()) + 1;
  }
  if (bytes.size() - pos < 2) {
    throw Error(ErrorCode::TruncatedFile,
                fmt::format("missing DAT event type/size bytes at byte {}", pos), pos);
  }
  header.event_type = bytes[pos];
  const std::uint8_t event_size = bytes[pos + 1];
  if (event_size != kDatRecordSize) {
    throw Error(ErrorCode::BadHeader,
                fmt::format("DAT event size {} at byte {}, expected 8", event_size, pos + 1),
                pos + 1);
  }
  header.body_offset = pos + 2;
  if (width.has_value() != height.has_value()) {
    throw Error(ErrorCode::BadHeader, "DAT header declares only one of width/height", 0);
  }
  if (width) {
    header.geometry = SensorGeometry{*width, *height};
  }
  return header;
}

EventStream decode_dat(std::span<const std::uint8_t> bytes,
                       std::optional<SensorGeometry> fallback) {
  const DatHeader header = read_dat_header(bytes);
  const auto geometry = header.geometry ? header.geometry : fallback;
  if (!geometry) {
    throw Error(ErrorCode::BadHeader, "DAT header has no geometry and none was supplied", 0);
  }
  const std::size_t body = bytes.size() - header.body_offset;
  if (body % kDatRecordSize != 0) {
    const std::size_t offset = header.body_offset + body / kDatRecordSize * kDatRecordSize;
    throw Error(ErrorCode::TruncatedFile,
                fmt::format("DAT body ends with a partial {}-byte record at byte {}",
                            body % kDatRecordSize, offset),
                offset);
  }
  const std::size_t n = body / kDatRecordSize;
  std::vector<Event> events(n);
  const std::uint8_t* p = bytes.data() + header.body_offset;
  for (std::size_t i = 0; i < n; ++i, p += kDatRecordSize) {
    const std::uint32_t ts = le::get_u32(p);
    const std::uint32_t packed = le::get_u32(p + 4);
    const std::uint32_t x = packed & 0x3FFFU;
    const std::uint32_t y = (packed >> 14) & 0x3FFFU;
    events[i] = Event{ts, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y),
                      static_cast<std::uint8_t>((packed >> 28) != 0 ? 1 : 0)};
  }
  return validate_stream(std::move(events), *geometry);
}

Bytes encode_dat(const EventStream& stream) {
  const auto& g = stream.geometry();
  if (g.width > 0x4000 || g.height > 0x4000) {
    throw Error(ErrorCode::InvalidArgument, "DAT coordinates are limited to 14 bits");
  }
  const std::string header =
      fmt::format("% Version 2\n% Width {}\n% Height {}\n", g.width, g.height);
  Bytes out;
  out.reserve(header.size() + 2 + stream.size() * kDatRecordSize);
  out.insert(out.end(), header.begin(), header.end());
  le::put_u8(out, 0x0C);  // CD event type
  le::put_u8(out, static_cast<std::uint8_t>(kDatRecordSize));
  for (const Event& e : stream.events()) {
    if (e.t > 0xFFFFFFFFULL) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("timestamp {} does not fit a 32-bit DAT record", e.t));
    }
    le::put_u32(out, static_cast<std::uint32_t>(e.t));
    le::put_u32(out, static_cast<std::uint32_t>(e.x) | (static_cast<std::uint32_t>(e.y) << 14) |
                         (static_cast<std::uint32_t>(e.p) << 28));
  }
  return out;
}

Bytes encode_evs(const EventStream& stream) {
  Bytes out;
  out.reserve(kEvsHeaderSize + stream.size() * kEvsRecordSize);
  out.insert(out.end(), kEvsMagic.begin(), kEvsMagic.end());
  le::put_u32(out, stream.geometry().width);
  le::put_u32(out, stream.geometry().height);
  le::put_u64(out, stream.size());
  for (const Event& e : stream.events()) {
    le::put_u64(out, e.t);
    le::put_u16(out, e.x);
    le::put_u16(out, e.y);
    le::put_u8(out, e.p);
    le::put_u8(out, 0);
    le::put_u16(out, 0);  // pads the record to its 16-byte stride
  }
  return out;
}

RecordingHeader read_evs_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) {
    throw Error(ErrorCode::TruncatedFile, "EVS file shorter than its magic", bytes.size());
  }
  if (std::memcmp(bytes.data(), kEvsMagic.data(), 3) != 0) {
    throw Error(ErrorCode::BadMagic, "not an EVS file", 0);
  }
  if (bytes[3] != '1') {
    throw Error(ErrorCode::VersionUnsupported,
                fmt::format("EVS version '{}' is not supported", static_cast<char>(bytes[3])), 3);
  }
  if (bytes.size() < kEvsHeaderSize) {
    throw Error(ErrorCode::TruncatedFile, "EVS header truncated", bytes.size());
  }
  RecordingHeader header;
  header.format_version = 1;
  header.geometry = {le::get_u32(bytes.data() + 4), le::get_u32(bytes.data() + 8)};
  header.event_count = le::get_u64(bytes.data() + 12);
  if (header.geometry.width == 0 || header.geometry.height == 0) {
    throw Error(ErrorCode::BadHeader, "EVS geometry must be at least 1x1", 4);
  }
  return header;
}

EventStream decode_evs(std::span<const std::uint8_t> bytes) {
  const RecordingHeader header = read_evs_header(bytes);
  const std::size_t body = bytes.size() - kEvsHeaderSize;
  if (header.event_count > body / kEvsRecordSize) {
    throw Error(ErrorCode::TruncatedFile,
                fmt::format("EVS header declares {} events but only {} bytes follow",
                            header.event_count, body),
                bytes.size());
  }
  if (body != header.event_count * kEvsRecordSize) {
    throw Error(ErrorCode::BadHeader,
                fmt::format("EVS file has {} trailing bytes", body - header.event_count * kEvsRecordSize),
                kEvsHeaderSize + header.event_count * kEvsRecordSize);
  }
  std::vector<Event> events(header.event_count);
  const std::uint8_t* p = bytes.data() + kEvsHeaderSize;
  for (auto& e : events) {
    e = Event{le::get_u64(p), le::get_u16(p + 8), le::get_u16(p + 10), p[12]};
    p += kEvsRecordSize;
  }
  return validate_stream(std::move(events), header.geometry);
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, fmt::format("cannot open '{}'", path.string()));
  }
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  Bytes data(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(size))) {
    throw Error(ErrorCode::IoError, fmt::format("short read on '{}'", path.string()));
  }
  return data;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoError, fmt::format("cannot create '{}'", path.string()));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error(ErrorCode::IoError, fmt::format("short write on '{}'", path.string()));
  }
}

EventStream read_recording(const std::filesystem::path& path,
                           std::optional<SensorGeometry> fallback) {
  const Bytes bytes = read_file(path);
  if (bytes.size() >= 3 && std::memcmp(bytes.data(), kEvsMagic.data(), 3) == 0) {
    return decode_evs(bytes);
  }
  return decode_dat(bytes, fallback);
}

// ---------------------------------------------------------------------------

std::string format_annotation(const AnnotatedBox& box) {
  const std::string track = box.track_id ? fmt::format("{}", *box.track_id) : std::string("-");
  return fmt::format("t={} x={} y={} w={} h={} class={} score={} track={}", box.t, box.x, box.y,
                     box.w, box.h, static_cast<unsigned>(box.class_id), box.score, track);
}

AnnotatedBox parse_annotation(std::string_view line, std::size_t line_number) {
  const auto fail = [&](const std::string& why) -> Error {
    return Error(ErrorCode::ParseError, fmt::format("line {}: {}", line_number, why), line_number);
  };

  AnnotatedBox box;
  unsigned seen = 0;
  enum : unsigned { kT = 1, kX = 2, kY = 4, kW = 8, kH = 16, kClass = 32, kScore = 64, kTrack = 128 };
  constexpr unsigned kRequired = kT | kX | kY | kW | kH | kClass;

  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    if (pos >= line.size()) break;
    std::size_t end = pos;
    while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
    const std::string_view token = line.substr(pos, end - pos);
    pos = end;

    const auto eq = token.find('=');
    if (eq == std::string_view::npos) throw fail(fmt::format("expected key=value, got '{}'", token));
    const std::string_view key = token.substr(0, eq);
    const std::string_view value = token.substr(eq + 1);

    const auto take = [&](unsigned bit, auto& slot) {
      if (seen & bit) throw fail(fmt::format("duplicate field '{}'", key));
      if (!parse_number(value, slot)) throw fail(fmt::format("bad value for '{}': '{}'", key, value));
      seen |= bit;
    };

    if (key == "t") {
      take(kT, box.t);
    } else if (key == "x") {
      take(kX, box.x);
    } else if (key == "y") {
      take(kY, box.y);
    } else if (key == "w") {
      take(kW, box.w);
    } else if (key == "h") {
      take(kH, box.h);
    } else if (key == "class") {
      unsigned cls = 0;
      take(kClass, cls);
      if (cls > 255) throw fail(fmt::format("class {} does not fit u8", cls));
      box.class_id = static_cast<std::uint8_t>(cls);
    } else if (key == "score") {
      take(kScore, box.score);
    } else if (key == "track") {
      if (seen & kTrack) throw fail("duplicate field 'track'");
      seen |= kTrack;
      if (value != "-") {
        std::int64_t id = 0;
        if (!parse_number(value, id)) throw fail(fmt::format("bad track id '{}'", value));
        box.track_id = id;
      }
    } else {
      throw fail(fmt::format("unknown field '{}'", key));
    }
  }
  if ((seen & kRequired) != kRequired) throw fail("missing one of t, x, y, w, h, class");
  if (!std::isfinite(box.x) || !std::isfinite(box.y) || !std::isfinite(box.w) ||
      !std::isfinite(box.h)) {
    throw fail("box coordinates must be finite");
  }
  if (!(box.w > 0.0F) || !(box.h > 0.0F)) throw fail("box width and height must be positive");
  if (!(box.score >= 0.0F && box.score <= 1.0F)) throw fail("score must lie in [0, 1]");
  return box;
}

std::vector<AnnotatedBox> read_annotations(std::istream& in) {
  std::vector<AnnotatedBox> boxes;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    boxes.push_back(parse_annotation(body, number));
  }
  std::stable_sort(boxes.begin(), boxes.end(),
                   [](const AnnotatedBox& a, const AnnotatedBox& b) { return a.t < b.t; });
  return boxes;
}

std::vector<AnnotatedBox> read_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::IoError, fmt::format("cannot open '{}'", path.string()));
  }
  return read_annotations(in);
}

void write_annotations(std::ostream& out, std::span<const AnnotatedBox> boxes) {
  for (const auto& box : boxes) {
    out << format_annotation(box) << '\n';
  }
}

void write_annotations(const std::filesystem::path& path, std::span<const AnnotatedBox> boxes) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoError, fmt::format("cannot create '{}'", path.string()));
  }
  write_annotations(out, boxes);
}

}  // namespace evkit
