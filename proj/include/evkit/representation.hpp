#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "evkit/event.hpp"
#include "evkit/tensor.hpp"

namespace evkit {

struct StackedHistogramConfig {
  Micros t_frame = 50'000;
  std::uint32_t n_bins = 10;
  std::optional<std::uint16_t> clip_limit;

  Micros t_bin() const noexcept { return t_frame / n_bins; }
  std::size_t channels() const noexcept { return 2 * static_cast<std::size_t>(n_bins); }
};

/// Throws InvalidArgument unless t_frame > 0, n_bins >= 1 and t_frame % n_bins == 0.
void validate(const StackedHistogramConfig& cfg);

/// Stacked histogram of events in [window.t0, window.t0 + cfg.t_frame).
///
/// The intermediate S(p, i, y, x) counts events of polarity p at (x, y) whose
/// timestamp falls in bin i = (t - t0) / t_bin. The (2, B) leading axes are
/// flattened polarity-major, so channel c = p * B + i. Counts saturate at
/// 65535, or at cfg.clip_limit when set.
///
/// Throws EventOutsideWindow for any event outside the window.
CountFrame stacked_histogram(std::span<const Event> events, SensorGeometry geometry,
                             TimeWindow window, const StackedHistogramConfig& cfg);
CountFrame stacked_histogram(const EventStream& events, TimeWindow window,
                             const StackedHistogramConfig& cfg);

/// Per-polarity event counts, shape (2, H, W). Same as B = 1.
CountFrame histogram2d(const EventStream& events, TimeWindow window);

enum class TimeSurfaceMode { Linear, Exponential };

/// Recency image of shape (2, H, W). For each (p, y, x) with a most recent event
/// at t_last: linear = max(0, 1 - (t_ref - t_last) / tau),
/// exponential = exp(-(t_ref - t_last) / tau). Pixels without events are 0.
///
/// Throws FutureEvent if any event is later than t_ref.
RealFrame time_surface(const EventStream& stream, Micros t_ref, Micros tau,
                       TimeSurfaceMode mode = TimeSurfaceMode::Linear);

}  // namespace evkit
