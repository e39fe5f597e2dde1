#include "evkit/representation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <fmt/core.h>

#include "evkit/error.hpp"

namespace evkit {

void validate(const StackedHistogramConfig& cfg) {
  if (cfg.t_frame == 0) {
    throw Error(ErrorCode::ZeroWindow, "t_frame must be positive");
  }
  if (cfg.n_bins == 0 || cfg.t_frame % cfg.n_bins != 0) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("t_frame {} is not divisible into {} bins", cfg.t_frame, cfg.n_bins));
  }
}

CountFrame stacked_histogram(std::span<const Event> events, SensorGeometry geometry,
                             TimeWindow window, const StackedHistogramConfig& cfg) {
  validate(cfg);
  const std::size_t bins = cfg.n_bins;
  const std::size_t h = geometry.height;
  const std::size_t w = geometry.width;
  CountFrame frame(2 * bins, h, w);
  auto cells = frame.data();
  const std::uint16_t cap = cfg.clip_limit.value_or(std::numeric_limits<std::uint16_t>::max());
  const Micros t0 = window.t0;
  const Micros t_bin = cfg.t_bin();
  const Micros span_us = cfg.t_frame;
  const std::size_t plane = h * w;

  for (std::size_t k = 0; k < events.size(); ++k) {
    const Event& e = events[k];
    if (e.t < t0 || e.t - t0 >= span_us) {
      throw Error(ErrorCode::EventOutsideWindow,
                  fmt::format("event {} at t={} outside [{}, {})", k, e.t, t0, t0 + span_us), k);
    }
    const std::size_t bin = static_cast<std::size_t>((e.t - t0) / t_bin);
    const std::size_t c = static_cast<std::size_t>(e.p) * bins + bin;
    std::uint16_t& cell = cells[c * plane + static_cast<std::size_t>(e.y) * w + e.x];
    if (cell < cap) ++cell;
  }
  return frame;
}

CountFrame stacked_histogram(const EventStream& events, TimeWindow window,
                             const StackedHistogramConfig& cfg) {
  return stacked_histogram(events.events(), events.geometry(), window, cfg);
}

CountFrame histogram2d(const EventStream& events, TimeWindow window) {
  if (window.t1 <= window.t0) {
    throw Error(ErrorCode::ZeroWindow, "empty time window");
  }
  StackedHistogramConfig cfg;
  cfg.t_frame = window.length();
  cfg.n_bins = 1;
  return stacked_histogram(events, window, cfg);
}

RealFrame time_surface(const EventStream& stream, Micros t_ref, Micros tau, TimeSurfaceMode mode) {
  if (tau == 0) {
    throw Error(ErrorCode::InvalidArgument, "time-surface tau must be positive");
  }
  const std::size_t h = stream.geometry().height;
  const std::size_t w = stream.geometry().width;
  const std::size_t plane = h * w;

  // Events are time-ordered, so the last write per cell is the most recent event.
  constexpr Micros kNone = std::numeric_limits<Micros>::max();
  std::vector<Micros> last(2 * plane, kNone);
  const auto events = stream.events();
  for (std::size_t k = 0; k < events.size(); ++k) {
    const Event& e = events[k];
    if (e.t > t_ref) {
      throw Error(ErrorCode::FutureEvent,
                  fmt::format("event {} at t={} is after t_ref={}", k, e.t, t_ref), k);
    }
    last[e.p * plane + static_cast<std::size_t>(e.y) * w + e.x] = e.t;
  }

  RealFrame out(2, h, w);
  auto values = out.data();
  const double inv_tau = 1.0 / static_cast<double>(tau);
  for (std::size_t i = 0; i < last.size(); ++i) {
    if (last[i] == kNone) continue;
    const double age = static_cast<double>(t_ref - last[i]) * inv_tau;
    const double v = mode == TimeSurfaceMode::Linear ? std::max(0.0, 1.0 - age) : std::exp(-age);
    values[i] = static_cast<float>(v);
  }
  return out;
}

}  // namespace evkit
