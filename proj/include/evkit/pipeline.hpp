#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "evkit/augment.hpp"
#include "evkit/detmetrics.hpp"
#include "evkit/evf.hpp"
#include "evkit/geometry.hpp"
#include "evkit/representation.hpp"
#include "evkit/sampler.hpp"

namespace evkit {

struct DatasetPreset {
  std::string name;
  SensorGeometry sensor;
  std::size_t downscale_factor = 1;
  Interpolation interpolation = Interpolation::Bilinear;
  std::size_t pad_multiple = 32;
  std::size_t clip_length = 21;
};

/// "gen1-like": 304x240, no downscale, pad to multiples of 32, clips of 21.
/// "gen4-like": 1280x720, factor 2 bilinear, pad to multiples of 32, clips of 10.
/// Throws ConfigError for unknown names.
DatasetPreset preset_by_name(const std::string& name);

struct PipelineConfig {
  DatasetPreset preset = preset_by_name("gen1-like");
  StackedHistogramConfig histogram;
  double bicubic_a = kDefaultBicubicA;
  Micros t_start = 0;
  bool drop_partial = false;
  AugmentConfig augment;
  EvalConfig eval = EvalConfig::coco();
  PlanConfig plan;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  /// Frame shape after downscale and padding.
  Shape3 output_shape() const;
};

/// Replaces the preset and everything derived from it (clip length).
void apply_preset(PipelineConfig& cfg, const DatasetPreset& preset);

/// INI-style file: [pipeline], [histogram], [geometry], [augment], [sampler],
/// [evaluate] sections of key = value. A `preset` key in [pipeline] is applied
/// before the other keys. Unknown keys are a ConfigError.
void load_config_file(PipelineConfig& cfg, const std::filesystem::path& path);

/// Throws the relevant module error when any part is inconsistent.
void validate(const PipelineConfig& cfg);

/// Stacked histogram, then downscale (as reals) when the preset asks for it,
/// then zero padding. Count frames stay u16 when no resampling happens.
AnyFrame build_frame(std::span<const Event> events, SensorGeometry geometry, TimeWindow window,
                     const PipelineConfig& cfg);

// ---------------------------------------------------------------------------
// Commands. Each one is deterministic in (inputs, config, seed).
// ---------------------------------------------------------------------------

struct IndexEntry {
  std::size_t frame = 0;
  TimeWindow window;
  std::size_t events = 0;
  bool partial = false;
  std::string source;
  std::vector<std::size_t> annotation_ids;
  std::string file;
};

void write_frame_index(const std::filesystem::path& path, std::span<const IndexEntry> entries);
std::vector<IndexEntry> read_frame_index(const std::filesystem::path& path);

struct ConvertSummary {
  std::size_t frames = 0;
  std::size_t events = 0;
  double seconds = 0.0;
  double events_per_second = 0.0;
};

/// Writes frame_NNNNNN.evf per window, index.txt and, when annotations are
/// given, annotations.txt in output-frame coordinates.
ConvertSummary cmd_convert(const std::filesystem::path& input, const std::filesystem::path& out_dir,
                           const PipelineConfig& cfg,
                           const std::optional<std::filesystem::path>& annotations = std::nullopt);

struct RecordingStats {
  std::size_t events = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
  Micros first_t = 0;
  Micros last_t = 0;
  Micros duration_us = 0;
  double rate_per_second = 0.0;
  std::size_t max_pixel_count = 0;
  SensorGeometry geometry;
};

RecordingStats compute_stats(const EventStream& stream);
RecordingStats cmd_stats(const std::filesystem::path& input, const PipelineConfig& cfg);
std::string format_stats(const RecordingStats& stats);

enum class AugmentMode { Frame, Video };

struct AugmentSummary {
  std::size_t frames = 0;
  std::size_t clips = 0;
};

/// Reads a directory produced by cmd_convert and writes augmented frames,
/// index.txt, annotations.txt (if present in the input) and aug_log.txt.
AugmentSummary cmd_augment(const std::filesystem::path& frames_dir, const std::filesystem::path& out_dir,
                           const PipelineConfig& cfg, AugmentMode mode);

EvalReport cmd_evaluate(const std::filesystem::path& predictions, const std::filesystem::path& ground_truth,
                        const PipelineConfig& cfg);

std::vector<ClipBatch> cmd_plan(const std::filesystem::path& sequence_index, const PipelineConfig& cfg);

}  // namespace evkit
