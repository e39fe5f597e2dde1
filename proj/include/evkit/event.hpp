#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace evkit {

/// Timestamps are integer microseconds everywhere.
using Micros = std::uint64_t;

struct Event {
  Micros t = 0;
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::uint8_t p = 0;  // 0 negative, 1 positive

  friend bool operator==(const Event&, const Event&) = default;
};

struct SensorGeometry {
  std::uint32_t width = 0;
  std::uint32_t height = 0;

  friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;
};

inline constexpr SensorGeometry kGen1Geometry{304, 240};
inline constexpr SensorGeometry kGen4Geometry{1280, 720};

/// Half-open interval [t0, t1).
struct TimeWindow {
  Micros t0 = 0;
  Micros t1 = 0;

  Micros length() const noexcept { return t1 - t0; }
  bool contains(Micros t) const noexcept { return t >= t0 && t < t1; }

  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

/// A validated, time-ordered event sequence. Only constructible through
/// validate_stream (or slicing an existing stream), so holding one is proof
/// that the invariants hold.
class EventStream {
 public:
  EventStream() = default;

  const SensorGeometry& geometry() const noexcept { return geometry_; }
  std::span<const Event> events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }
  const Event& operator[](std::size_t i) const { return events_[i]; }

  friend bool operator==(const EventStream&, const EventStream&) = default;

 private:
  friend EventStream validate_stream(std::vector<Event> raw, SensorGeometry geometry);
  friend EventStream slice_window(const EventStream& stream, TimeWindow window);

  EventStream(SensorGeometry geometry, std::vector<Event> events)
      : geometry_(geometry), events_(std::move(events)) {}

  SensorGeometry geometry_{};
  std::vector<Event> events_;
};

/// One window of a partition plus the index range [begin, end) of its events.
/// `partial` marks the trailing window whose end lies past the last event.
struct WindowSlice {
  TimeWindow window;
  std::size_t begin = 0;
  std::size_t end = 0;
  bool partial = false;

  std::size_t count() const noexcept { return end - begin; }
};

/// Throws NonMonotoneTimestamp / OutOfBounds / BadPolarity with the index of the
/// first offending event, or InvalidArgument for a degenerate geometry.
EventStream validate_stream(std::vector<Event> raw, SensorGeometry geometry);

/// Splits [t_start, last event] into consecutive windows of t_frame.
/// Windows with no events in the middle of the stream are still emitted.
std::vector<WindowSlice> partition_windows(const EventStream& stream, Micros t_frame,
                                           Micros t_start = 0);

/// Events with window.t0 <= t < window.t1, found by binary search.
EventStream slice_window(const EventStream& stream, TimeWindow window);

/// Index range of events inside `window` without copying.
std::pair<std::size_t, std::size_t> window_range(const EventStream& stream, TimeWindow window);

}  // namespace evkit
