#include "evkit/event.hpp"

#include <algorithm>
#include <string>

#include <fmt/core.h>

#include "evkit/error.hpp"

namespace evkit {

EventStream validate_stream(std::vector<Event> raw, SensorGeometry geometry) {
  if (geometry.width < 1 || geometry.height < 1) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("sensor geometry must be at least 1x1, got {}x{}", geometry.width,
                            geometry.height));
  }
  Micros prev = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const Event& e = raw[i];
    if (i > 0 && e.t < prev) {
      throw Error(ErrorCode::NonMonotoneTimestamp,
                  fmt::format("event {} has t={} after t={}", i, e.t, prev), i);
    }
    if (e.x >= geometry.width || e.y >= geometry.height) {
      throw Error(ErrorCode::OutOfBounds,
                  fmt::format("event {} at ({}, {}) outside {}x{}", i, e.x, e.y, geometry.width,
                              geometry.height),
                  i);
    }
    if (e.p > 1) {
      throw Error(ErrorCode::BadPolarity, fmt::format("event {} has polarity {}", i, e.p), i);
    }
    prev = e.t;
  }
  return EventStream(geometry, std::move(raw));
}

std::pair<std::size_t, std::size_t> window_range(const EventStream& stream, TimeWindow window) {
  const auto events = stream.events();
  const auto by_time = [](const Event& e, Micros t) { return e.t < t; };
  const auto lo = std::lower_bound(events.begin(), events.end(), window.t0, by_time);
  const auto hi = std::lower_bound(lo, events.end(), window.t1, by_time);
  return {static_cast<std::size_t>(lo - events.begin()),
          static_cast<std::size_t>(hi - events.begin())};
}

std::vector<WindowSlice> partition_windows(const EventStream& stream, Micros t_frame,
                                           Micros t_start) {
  if (t_frame == 0) {
    throw Error(ErrorCode::ZeroWindow, "window length must be positive");
  }
  std::vector<WindowSlice> out;
  if (stream.empty()) {
    return out;
  }
  const auto events = stream.events();
  if (events.front().t < t_start) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("window origin {} is after the first event at {}", t_start,
                            events.front().t));
  }
  const Micros last = events.back().t;
  const std::size_t n_windows = static_cast<std::size_t>((last - t_start) / t_frame) + 1;
  out.reserve(n_windows);

  // Single forward sweep; each event is visited once.
  std::size_t cursor = 0;
  for (std::size_t k = 0; k < n_windows; ++k) {
    WindowSlice slice;
    slice.window = {t_start + k * t_frame, t_start + (k + 1) * t_frame};
    slice.begin = cursor;
    while (cursor < events.size() && events[cursor].t < slice.window.t1) {
      ++cursor;
    }
    slice.end = cursor;
    slice.partial = k + 1 == n_windows && last + 1 < slice.window.t1;
    out.push_back(slice);
  }
  return out;
}

EventStream slice_window(const EventStream& stream, TimeWindow window) {
  const auto [lo, hi] = window_range(stream, window);
  const auto events = stream.events();
  return EventStream(stream.geometry(),
                     std::vector<Event>(events.begin() + static_cast<std::ptrdiff_t>(lo),
                                        events.begin() + static_cast<std::ptrdiff_t>(hi)));
}

}  // namespace evkit
