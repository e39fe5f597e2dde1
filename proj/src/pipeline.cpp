#include "evkit/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/core.h>
#include <fmt/ranges.h>

#include "evkit/error.hpp"

namespace evkit {

DatasetPreset preset_by_name(const std::string& name) {
  if (name == "gen1-like") {
    return {"gen1-like", kGen1Geometry, 1, Interpolation::Bilinear, 32, 21};
  }
  if (name == "gen4-like") {
    return {"gen4-like", kGen4Geometry, 2, Interpolation::Bilinear, 32, 10};
  }
  throw Error(ErrorCode::ConfigError, fmt::format("unknown preset '{}'", name));
}

Shape3 PipelineConfig::output_shape() const {
  const std::size_t f = preset.downscale_factor;
  const std::size_t m = std::max<std::size_t>(1, preset.pad_multiple);
  const auto up = [m](std::size_t v) { return (v + m - 1) / m * m; };
  return {histogram.channels(), up(preset.sensor.height / f), up(preset.sensor.width / f)};
}

void apply_preset(PipelineConfig& cfg, const DatasetPreset& preset) {
  cfg.preset = preset;
  cfg.plan.clip_length = preset.clip_length;
}

namespace {

namespace pt = boost::property_tree;

Interpolation parse_interpolation(const std::string& s) {
  if (s == "nearest") return Interpolation::Nearest;
  if (s == "bilinear") return Interpolation::Bilinear;
  if (s == "bicubic") return Interpolation::Bicubic;
  throw Error(ErrorCode::ConfigError, fmt::format("unknown interpolation '{}'", s));
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  T v{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) {
    throw Error(ErrorCode::ConfigError, fmt::format("bad value '{}' for '{}'", text, key));
  }
  return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string piece;
  while (std::getline(ss, piece, ',')) {
    piece.erase(0, piece.find_first_not_of(" \t"));
    piece.erase(piece.find_last_not_of(" \t") + 1);
    if (!piece.empty()) out.push_back(parse_value<double>(key, piece));
  }
  return out;
}

Range parse_range(const std::string& key, const std::string& text) {
  const auto v = parse_list(key, text);
  if (v.size() != 2) {
    throw Error(ErrorCode::ConfigError, fmt::format("'{}' needs two comma-separated values", key));
  }
  return {v[0], v[1]};
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true" || text == "yes") return true;
  if (text == "0" || text == "false" || text == "no") return false;
  throw Error(ErrorCode::ConfigError, fmt::format("bad boolean '{}' for '{}'", text, key));
}

void apply_key(PipelineConfig& cfg, const std::string& section, const std::string& key,
               const std::string& value) {
  const std::string full = section + "." + key;
  const auto d = [&] { return parse_value<double>(full, value); };
  const auto u = [&] { return parse_value<std::uint64_t>(full, value); };
  const auto z = [&] { return static_cast<std::size_t>(u()); };
  const auto r = [&] { return parse_range(full, value); };

  if (section == "pipeline") {
    if (key == "preset") return;  // applied first
    if (key == "seed") { cfg.seed = u(); return; }
    if (key == "threads") { cfg.threads = z(); return; }
  } else if (section == "histogram") {
    if (key == "t_frame") { cfg.histogram.t_frame = u(); return; }
    if (key == "n_bins") { cfg.histogram.n_bins = static_cast<std::uint32_t>(u()); return; }
    if (key == "clip_limit") {
      if (value == "none") {
        cfg.histogram.clip_limit.reset();
      } else {
        const auto v = u();
        if (v == 0 || v > 0xFFFF) throw Error(ErrorCode::ConfigError, "clip_limit must be in [1, 65535]");
        cfg.histogram.clip_limit = static_cast<std::uint16_t>(v);
      }
      return;
    }
    if (key == "t_start") { cfg.t_start = u(); return; }
    if (key == "drop_partial") { cfg.drop_partial = parse_bool(full, value); return; }
  } else if (section == "geometry") {
    if (key == "width") { cfg.preset.sensor.width = static_cast<std::uint32_t>(u()); return; }
    if (key == "height") { cfg.preset.sensor.height = static_cast<std::uint32_t>(u()); return; }
    if (key == "downscale") { cfg.preset.downscale_factor = z(); return; }
    if (key == "interpolation") { cfg.preset.interpolation = parse_interpolation(value); return; }
    if (key == "pad_multiple") { cfg.preset.pad_multiple = z(); return; }
    if (key == "bicubic_a") { cfg.bicubic_a = d(); return; }
  } else if (section == "augment") {
    auto& a = cfg.augment;
    if (key == "hflip_p") { a.hflip_p = d(); return; }
    if (key == "rotation_p") { a.rotation_p = d(); return; }
    if (key == "rotation_deg") { a.rotation_deg = r(); return; }
    if (key == "translation_p") { a.translation_p = d(); return; }
    if (key == "translation_frac") { a.translation_frac = r(); return; }
    if (key == "scale_p") { a.scale_p = d(); return; }
    if (key == "scale") { a.scale = r(); return; }
    if (key == "shear_p") { a.shear_p = d(); return; }
    if (key == "shear_deg") { a.shear_deg = r(); return; }
    if (key == "erasure_p") { a.erasure_p = d(); return; }
    if (key == "erasure_area") { a.erasure_area = r(); return; }
    if (key == "erasure_ratio") { a.erasure_ratio = r(); return; }
    if (key == "erasure_fill") { a.erasure_fill = static_cast<float>(d()); return; }
    if (key == "min_box_area") { a.min_box_area = d(); return; }
    if (key == "min_box_visibility") { a.min_box_visibility = d(); return; }
  } else if (section == "sampler") {
    if (key == "clip_length") { cfg.plan.clip_length = z(); return; }
    if (key == "n_random") { cfg.plan.n_random = z(); return; }
    if (key == "n_sequential") { cfg.plan.n_sequential = z(); return; }
  } else if (section == "evaluate") {
    auto& e = cfg.eval;
    if (key == "iou_thresholds") { e.iou_thresholds = parse_list(full, value); return; }
    if (key == "classes") {
      e.classes.clear();
      for (const double c : parse_list(full, value)) {
        if (c < 0 || c > 255 || c != static_cast<double>(static_cast<int>(c))) {
          throw Error(ErrorCode::ConfigError, fmt::format("bad class id {}", c));
        }
        e.classes.push_back(static_cast<std::uint8_t>(c));
      }
      return;
    }
    if (key == "min_box_diagonal") { e.min_box_diagonal = d(); return; }
    if (key == "skip_before_us") { e.skip_before_us = u(); return; }
    if (key == "time_tolerance_us") { e.time_tolerance_us = u(); return; }
  }
  throw Error(ErrorCode::ConfigError, fmt::format("unknown config key '{}'", full));
}

}  // namespace

void load_config_file(PipelineConfig& cfg, const std::filesystem::path& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::ConfigError, e.what(), e.line());
  }
  if (const auto preset = tree.get_optional<std::string>("pipeline.preset")) {
    apply_preset(cfg, preset_by_name(*preset));
  }
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw Error(ErrorCode::ConfigError, fmt::format("key '{}' must be inside a section", section));
    }
    for (const auto& [key, node] : body) {
      apply_key(cfg, section, key, node.get_value<std::string>());
    }
  }
}

void validate(const PipelineConfig& cfg) {
  validate(cfg.histogram);
  validate(cfg.augment);
  validate(cfg.eval);
  const auto& p = cfg.preset;
  if (p.sensor.width == 0 || p.sensor.height == 0) {
    throw Error(ErrorCode::ConfigError, "sensor geometry must be at least 1x1");
  }
  if (p.downscale_factor == 0 || p.sensor.width % p.downscale_factor != 0 ||
      p.sensor.height % p.downscale_factor != 0) {
    throw Error(ErrorCode::NotDivisible,
                fmt::format("sensor {}x{} is not divisible by factor {}", p.sensor.width,
                            p.sensor.height, p.downscale_factor));
  }
  if (p.pad_multiple == 0) {
    throw Error(ErrorCode::ConfigError, "pad_multiple must be at least 1");
  }
  if (cfg.plan.clip_length == 0) {
    throw Error(ErrorCode::ConfigError, "clip_length must be at least 1");
  }
  if (cfg.threads == 0) {
    throw Error(ErrorCode::ConfigError, "threads must be at least 1");
  }
}

AnyFrame build_frame(std::span<const Event> events, SensorGeometry geometry, TimeWindow window,
                     const PipelineConfig& cfg) {
  CountFrame hist = stacked_histogram(events, geometry, window, cfg.histogram);
  if (cfg.preset.downscale_factor > 1) {
    RealFrame small = downscale(hist, cfg.preset.downscale_factor, cfg.preset.interpolation, cfg.bicubic_a);
    return pad_to_multiple(small, cfg.preset.pad_multiple).frame;
  }
  return pad_to_multiple(hist, cfg.preset.pad_multiple).frame;
}

// ---------------------------------------------------------------------------

namespace {

std::string frame_file_name(std::size_t k) { return fmt::format("frame_{:06d}.evf", k); }

std::string join_ids(const std::vector<std::size_t>& ids) {
  return ids.empty() ? std::string("-") : fmt::format("{}", fmt::join(ids, ","));
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::IoError, fmt::format("cannot create directory '{}': {}", dir.string(), ec.message()));
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot create '{}'", path.string()));
  return out;
}

/// Runs body(k) for k in [0, n) on up to `threads` workers. The exception from
/// the lowest failing k is rethrown.
template <typename Body>
void parallel_for(std::size_t n, std::size_t threads, Body body) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = n;
  std::exception_ptr failure;
  const auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= n) return;
      try {
        body(k);
      } catch (...) {
        std::lock_guard lock(mu);
        if (k < failed_at) {
          failed_at = k;
          failure = std::current_exception();
        }
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

void write_frame_index(const std::filesystem::path& path, std::span<const IndexEntry> entries) {
  auto out = open_out(path);
  for (const auto& e : entries) {
    out << fmt::format("frame={} t0={} t1={} events={} partial={} source={} annotations={} file={}\n",
                       e.frame, e.window.t0, e.window.t1, e.events, e.partial ? 1 : 0, e.source,
                       join_ids(e.annotation_ids), e.file);
  }
}

std::vector<IndexEntry> read_frame_index(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open '{}'", path.string()));
  std::vector<IndexEntry> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    std::unordered_map<std::string, std::string> f;
    std::istringstream tokens(line);
    std::string token;
    while (tokens >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorCode::ParseError, fmt::format("{}:{}: expected key=value", path.string(), number), number);
      }
      f[token.substr(0, eq)] = token.substr(eq + 1);
    }
    const auto get = [&](const char* key) -> const std::string& {
      const auto it = f.find(key);
      if (it == f.end()) {
        throw Error(ErrorCode::ParseError, fmt::format("{}:{}: missing '{}'", path.string(), number, key), number);
      }
      return it->second;
    };
    const auto num = [&](const char* key) {
      const std::string& s = get(key);
      std::uint64_t v = 0;
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw Error(ErrorCode::ParseError, fmt::format("{}:{}: bad '{}'", path.string(), number, key), number);
      }
      return v;
    };
    IndexEntry e;
    e.frame = num("frame");
    e.window = {num("t0"), num("t1")};
    e.events = num("events");
    e.partial = num("partial") != 0;
    e.source = get("source");
    e.file = get("file");
    const std::string& ids = get("annotations");
    if (ids != "-") {
      std::stringstream ss(ids);
      std::string piece;
      while (std::getline(ss, piece, ',')) {
        std::size_t v = 0;
        const auto [ptr, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), v);
        if (ec != std::errc{} || ptr != piece.data() + piece.size()) {
          throw Error(ErrorCode::ParseError, fmt::format("{}:{}: bad annotation id", path.string(), number), number);
        }
        e.annotation_ids.push_back(v);
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

ConvertSummary cmd_convert(const std::filesystem::path& input, const std::filesystem::path& out_dir,
                           const PipelineConfig& cfg,
                           const std::optional<std::filesystem::path>& annotations) {
  validate(cfg);
  const auto started = std::chrono::steady_clock::now();
  const EventStream stream = read_recording(input, cfg.preset.sensor);
  if (stream.geometry() != cfg.preset.sensor) {
    throw Error(ErrorCode::ConfigError,
                fmt::format("recording is {}x{} but preset '{}' expects {}x{}", stream.geometry().width,
                            stream.geometry().height, cfg.preset.name, cfg.preset.sensor.width,
                            cfg.preset.sensor.height));
  }
  auto windows = partition_windows(stream, cfg.histogram.t_frame, cfg.t_start);
  if (cfg.drop_partial && !windows.empty() && windows.back().partial) windows.pop_back();

  std::vector<AnnotatedBox> boxes;
  if (annotations) boxes = read_annotations(*annotations);

  ensure_dir(out_dir);
  const std::string source = input.filename().string();
  std::vector<IndexEntry> index(windows.size());
  const auto events = stream.events();
  parallel_for(windows.size(), cfg.threads, [&](std::size_t k) {
    const WindowSlice& w = windows[k];
    const AnyFrame frame = build_frame(events.subspan(w.begin, w.count()), stream.geometry(), w.window, cfg);
    IndexEntry& e = index[k];
    e.frame = k;
    e.window = w.window;
    e.events = w.count();
    e.partial = w.partial;
    e.source = source;
    e.file = frame_file_name(k);
    const auto lo = std::lower_bound(boxes.begin(), boxes.end(), w.window.t0,
                                     [](const AnnotatedBox& b, Micros t) { return b.t < t; });
    for (auto it = lo; it != boxes.end() && it->t < w.window.t1; ++it) {
      e.annotation_ids.push_back(static_cast<std::size_t>(it - boxes.begin()));
    }
    write_evf(out_dir / e.file, frame);
  });
  write_frame_index(out_dir / "index.txt", index);
  if (annotations) {
    const double s = 1.0 / static_cast<double>(cfg.preset.downscale_factor);
    write_annotations(out_dir / "annotations.txt", map_boxes(boxes, s, s));
  }

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  ConvertSummary summary;
  summary.frames = windows.size();
  summary.events = stream.size();
  summary.seconds = seconds;
  summary.events_per_second = seconds > 0.0 ? static_cast<double>(stream.size()) / seconds : 0.0;
  return summary;
}

RecordingStats compute_stats(const EventStream& stream) {
  RecordingStats s;
  s.geometry = stream.geometry();
  s.events = stream.size();
  std::vector<std::uint32_t> per_pixel(static_cast<std::size_t>(s.geometry.width) * s.geometry.height, 0);
  for (const Event& e : stream.events()) {
    if (e.p) {
      ++s.positive;
    } else {
      ++s.negative;
    }
    const std::uint32_t c = ++per_pixel[static_cast<std::size_t>(e.y) * s.geometry.width + e.x];
    s.max_pixel_count = std::max<std::size_t>(s.max_pixel_count, c);
  }
  if (!stream.empty()) {
    s.first_t = stream[0].t;
    s.last_t = stream[stream.size() - 1].t;
    s.duration_us = s.last_t - s.first_t;
    if (s.duration_us > 0) {
      s.rate_per_second = static_cast<double>(s.events) * 1e6 / static_cast<double>(s.duration_us);
    }
  }
  return s;
}

RecordingStats cmd_stats(const std::filesystem::path& input, const PipelineConfig& cfg) {
  return compute_stats(read_recording(input, cfg.preset.sensor));
}

std::string format_stats(const RecordingStats& s) {
  return fmt::format(
      "width={}\nheight={}\nevents={}\npositive={}\nnegative={}\nfirst_t={}\nlast_t={}\n"
      "duration_us={}\nrate_per_s={:.3f}\nmax_pixel_count={}\n",
      s.geometry.width, s.geometry.height, s.events, s.positive, s.negative, s.first_t, s.last_t,
      s.duration_us, s.rate_per_second, s.max_pixel_count);
}

AugmentSummary cmd_augment(const std::filesystem::path& frames_dir, const std::filesystem::path& out_dir,
                           const PipelineConfig& cfg, AugmentMode mode) {
  validate(cfg.augment);
  if (std::filesystem::exists(out_dir) && std::filesystem::equivalent(frames_dir, out_dir)) {
    throw Error(ErrorCode::InvalidArgument, "augment output directory must differ from its input");
  }
  const auto index = read_frame_index(frames_dir / "index.txt");
  const auto ann_path = frames_dir / "annotations.txt";
  const bool have_boxes = std::filesystem::exists(ann_path);
  const std::vector<AnnotatedBox> boxes = have_boxes ? read_annotations(ann_path) : std::vector<AnnotatedBox>{};

  std::vector<std::vector<AnnotatedBox>> frame_boxes(index.size());
  for (std::size_t k = 0; k < index.size(); ++k) {
    for (const std::size_t id : index[k].annotation_ids) {
      if (id >= boxes.size()) {
        throw Error(ErrorCode::ParseError, fmt::format("frame {} references missing annotation {}", k, id), k);
      }
      frame_boxes[k].push_back(boxes[id]);
    }
  }

  ensure_dir(out_dir);
  auto log = open_out(out_dir / "aug_log.txt");
  const Rng root = Rng(cfg.seed).split(0xA06);
  const BoxFilter filter{cfg.augment.min_box_area, cfg.augment.min_box_visibility};
  const std::size_t clip_len = mode == AugmentMode::Video ? cfg.plan.clip_length : 1;

  std::vector<IndexEntry> out_index = index;
  std::vector<AnnotatedBox> out_boxes;
  AugmentSummary summary;
  for (std::size_t first = 0; first < index.size(); first += clip_len) {
    const std::size_t last = std::min(index.size(), first + clip_len);
    const std::size_t clip = summary.clips++;
    const Rng clip_rng = root.split(clip);

    std::vector<AnyFrame> frames;
    for (std::size_t k = first; k < last; ++k) frames.push_back(read_evf(frames_dir / index[k].file));
    const Shape3 shape = frame_shape(frames.front());
    const ImageSize size{shape.width, shape.height};
    const GeometricDraw geometric = sample_geometric(cfg.augment, size, clip_rng.split(kGeometricStream));
    const Rng erasure_root = clip_rng.split(kErasureStream);

    if (mode == AugmentMode::Video) {
      log << fmt::format("clip={} frames={}-{} {}\n", clip, first, last - 1, format_geometric(geometric));
    }
    for (std::size_t k = first; k < last; ++k) {
      const Shape3 s = frame_shape(frames[k - first]);
      if (s != shape) {
        throw Error(ErrorCode::ShapeMismatch, fmt::format("frame {} shape differs within clip {}", k, clip), k);
      }
      SampledAugmentation aug;
      aug.size = size;
      aug.geometric = geometric;
      aug.erasure = sample_erasure(cfg.augment, size, erasure_root.split(k - first));
      const AnyFrame result = std::visit(
          [&](const auto& f) -> AnyFrame { return apply_to_frame(f, aug, cfg.augment.erasure_fill); },
          frames[k - first]);
      write_evf(out_dir / index[k].file, result);

      const auto transformed = apply_to_boxes(frame_boxes[k], aug, filter);
      out_index[k].annotation_ids.clear();
      for (const auto& b : transformed) {
        out_index[k].annotation_ids.push_back(out_boxes.size());
        out_boxes.push_back(b);
      }
      if (mode == AugmentMode::Video) {
        log << fmt::format("frame={} clip={} {}\n", k, clip, format_erasure(aug.erasure));
      } else {
        log << fmt::format("frame={} {} {}\n", k, format_geometric(geometric), format_erasure(aug.erasure));
      }
      ++summary.frames;
    }
  }
  write_frame_index(out_dir / "index.txt", out_index);
  if (have_boxes) write_annotations(out_dir / "annotations.txt", out_boxes);
  return summary;
}

EvalReport cmd_evaluate(const std::filesystem::path& predictions, const std::filesystem::path& ground_truth,
                        const PipelineConfig& cfg) {
  const auto preds = read_annotations(predictions);
  const auto gts = read_annotations(ground_truth);
  return evaluate(preds, gts, cfg.eval);
}

std::vector<ClipBatch> cmd_plan(const std::filesystem::path& sequence_index, const PipelineConfig& cfg) {
  const auto seqs = read_sequence_index(sequence_index);
  if (seqs.empty()) {
    throw Error(ErrorCode::EmptyDataset, fmt::format("'{}' lists no sequences", sequence_index.string()));
  }
  return plan_epoch(seqs, cfg.plan, Rng(cfg.seed).split(0x51A));
}

}  // namespace evkit
