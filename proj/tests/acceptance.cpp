// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes. Tolerances and sizes are fixed here, not tunable.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <fmt/core.h>

#include "evkit/augment.hpp"
#include "evkit/detmetrics.hpp"
#include "evkit/error.hpp"
#include "evkit/pipeline.hpp"
#include "evkit/sampler.hpp"
#include "evkit/temporal.hpp"
#include "oracles.hpp"

using namespace evkit;
namespace fs = std::filesystem;

namespace {

// -- pinned criteria -------------------------------------------------------
constexpr std::size_t kConservationWindows = 1000;
constexpr std::size_t kConservationMaxEvents = 100'000;
constexpr double kConservationSeconds = 10.0;
constexpr std::size_t kEvsRoundtripEvents = 1'000'000;
constexpr std::size_t kFuzzInputs = 10'000;
constexpr std::size_t kResampleFrames = 100;
constexpr std::size_t kResampleMaxSide = 64;
constexpr double kResampleRelTol = 1e-6;
constexpr std::size_t kMaskRectangles = 200;
constexpr double kMaskMinIou = 0.9;
constexpr std::size_t kMonteCarloDraws = 10'000;
constexpr double kRateTol = 0.02;
constexpr double kAnalyticTol = 1e-7;
constexpr double kScalarLstmTol = 1e-6;
constexpr std::size_t kRolloutSteps = 21;
constexpr std::size_t kMapSeeds = 50;
constexpr std::size_t kMapBoxes = 200;
constexpr double kMapTol = 1e-9;
constexpr std::size_t kThroughputEvents = 10'000'000;
constexpr double kMinEventsPerSecond = 5e6;

const fs::path kFixtures = EVKIT_FIXTURE_DIR;

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Collects failures; the first failing check's message is kept.
struct Checker {
  Outcome out;
  void require(bool ok, const std::string& why) {
    if (!ok && out.pass) {
      out.pass = false;
      out.detail = why;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

/// Sorted events without a comparison sort: offsets are bucketed by counting.
std::vector<Event> sorted_window_events(std::mt19937_64& gen, std::size_t n, SensorGeometry g, Micros t0,
                                        Micros span) {
  std::vector<std::uint32_t> per_t(span, 0);
  for (std::size_t i = 0; i < n; ++i) ++per_t[gen() % span];
  std::vector<Event> out;
  out.reserve(n);
  for (Micros dt = 0; dt < span; ++dt) {
    for (std::uint32_t k = 0; k < per_t[dt]; ++k) {
      const std::uint64_t r = gen();
      out.push_back({t0 + dt, static_cast<std::uint16_t>((r & 0xFFFF) % g.width),
                     static_cast<std::uint16_t>(((r >> 16) & 0xFFFF) % g.height), static_cast<std::uint8_t>((r >> 40) & 1)});
    }
  }
  return out;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::map<std::string, std::uint64_t> hash_tree(const fs::path& root) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = fnv1a(slurp(e.path()));
  }
  return out;
}

// -- 1 ---------------------------------------------------------------------
Outcome conservation() {
  Checker c;
  std::mt19937_64 gen(1);
  const std::uint32_t bin_choices[] = {1, 2, 5, 10, 20, 25};
  const auto start = std::chrono::steady_clock::now();
  std::size_t total_events = 0;
  for (std::size_t w = 0; w < kConservationWindows && c.out.pass; ++w) {
    const std::size_t n = gen() % (kConservationMaxEvents + 1);
    const Micros t0 = (gen() % 1000) * 50'000;
    const StackedHistogramConfig cfg{50'000, bin_choices[gen() % 6], {}};
    const auto events = sorted_window_events(gen, n, kGen1Geometry, t0, cfg.t_frame);
    total_events += n;
    const TimeWindow window{t0, t0 + cfg.t_frame};
    const CountFrame stacked = stacked_histogram(events, kGen1Geometry, window, cfg);
    const CountFrame plain = stacked_histogram(events, kGen1Geometry, window, StackedHistogramConfig{50'000, 1, {}});
    std::size_t sum = 0;
    for (const auto v : stacked.data()) sum += v;
    c.require(sum == n, fmt::format("window {}: histogram total {} != {} events", w, sum, n));
    const std::size_t plane = stacked.shape().plane();
    const std::size_t bins = cfg.n_bins;
    for (std::size_t p = 0; p < 2 && c.out.pass; ++p) {
      for (std::size_t k = 0; k < plane; ++k) {
        std::size_t refined = 0;
        for (std::size_t i = 0; i < bins; ++i) refined += stacked.data()[(p * bins + i) * plane + k];
        if (refined != plain.data()[p * plane + k]) {
          c.require(false, fmt::format("window {}: bin refinement mismatch at polarity {} pixel {}", w, p, k));
          break;
        }
      }
    }
  }
  const double secs = seconds_since(start);
  c.require(secs < kConservationSeconds, fmt::format("took {:.2f} s", secs));
  if (c.out.pass) c.out.detail = fmt::format("{} windows, {} events, {:.2f} s", kConservationWindows, total_events, secs);
  return c.out;
}

// -- 2 ---------------------------------------------------------------------
Outcome shape_pipeline() {
  Checker c;
  PipelineConfig g1;
  PipelineConfig g4;
  apply_preset(g4, preset_by_name("gen4-like"));
  std::mt19937_64 gen(2);
  const auto e1 = sorted_window_events(gen, 5000, kGen1Geometry, 0, 50'000);
  const auto e4 = sorted_window_events(gen, 5000, kGen4Geometry, 0, 50'000);
  const Shape3 s1 = frame_shape(build_frame(e1, kGen1Geometry, {0, 50'000}, g1));
  const Shape3 s4 = frame_shape(build_frame(e4, kGen4Geometry, {0, 50'000}, g4));
  c.require(s1 == Shape3{20, 256, 320}, fmt::format("gen1-like gave ({}, {}, {})", s1.channels, s1.height, s1.width));
  c.require(s4 == Shape3{20, 384, 640}, fmt::format("gen4-like gave ({}, {}, {})", s4.channels, s4.height, s4.width));
  c.require(g4.preset.downscale_factor == 2 && g4.preset.interpolation == Interpolation::Bilinear,
            "gen4-like must downscale by 2 with bilinear");
  if (c.out.pass) c.out.detail = "(20, 256, 320) and (20, 384, 640)";
  return c.out;
}

// -- 3 ---------------------------------------------------------------------
Outcome codec() {
  Checker c;
  std::mt19937_64 gen(3);
  auto raw = sorted_window_events(gen, kEvsRoundtripEvents, kGen4Geometry, 0, 1'000'000);
  // spread timestamps over the full 64-bit range used by EVS
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i].t = raw[i].t * 4096 + (1ULL << 40);
  const auto stream = validate_stream(raw, kGen4Geometry);
  const Bytes evs = encode_evs(stream);
  c.require(decode_evs(evs) == stream, "EVS decode differs from the input");
  c.require(encode_evs(decode_evs(evs)) == evs, "EVS re-encode is not bit-exact");

  const std::string header = "% Width 304\n% Height 240\n";
  Bytes golden(header.begin(), header.end());
  golden.insert(golden.end(), {0x0C, 0x08,
                               0x64, 0x00, 0x00, 0x00, 0x01, 0x80, 0x00, 0x00,    // t=100 (1,2) p0
                               0x70, 0x11, 0x01, 0x00, 0x2F, 0xC1, 0x3B, 0x10,    // t=70000 (303,239) p1
                               0x70, 0x11, 0x01, 0x00, 0x00, 0x00, 0x00, 0xF0});  // t=70000 (0,0) p nibble 0xF
  const auto dat = decode_dat(golden);
  const std::vector<Event> want{{100, 1, 2, 0}, {70'000, 303, 239, 1}, {70'000, 0, 0, 1}};
  c.require(std::vector<Event>(dat.events().begin(), dat.events().end()) == want, "DAT golden blob mismatch");

  std::size_t errors = 0;
  std::size_t decoded = 0;
  for (std::size_t i = 0; i < kFuzzInputs; ++i) {
    Bytes b;
    switch (i % 3) {
      case 0:
        b.resize(gen() % 96);
        for (auto& v : b) v = static_cast<std::uint8_t>(gen());
        break;
      case 1:
        b = golden;
        for (int k = 0; k < 3; ++k) b[gen() % b.size()] = static_cast<std::uint8_t>(gen());
        b.resize(gen() % (b.size() + 1));
        break;
      default: {
        const std::string h = fmt::format("% Width {}\n", gen() % 3);
        b.assign(h.begin(), h.end());
        const std::size_t extra = gen() % 40;
        for (std::size_t k = 0; k < extra; ++k) b.push_back(static_cast<std::uint8_t>(gen()));
      }
    }
    try {
      (void)decode_dat(b);
      ++decoded;
    } catch (const Error&) {
      ++errors;
    } catch (const std::exception& e) {
      c.require(false, fmt::format("fuzz input {} raised a non-toolkit exception: {}", i, e.what()));
    }
  }
  if (c.out.pass) {
    c.out.detail = fmt::format("EVS {} events bit-exact; DAT golden ok; fuzz {} inputs ({} errors, {} decoded)",
                               kEvsRoundtripEvents, kFuzzInputs, errors, decoded);
  }
  return c.out;
}

// -- 4 ---------------------------------------------------------------------
Outcome resampling() {
  Checker c;
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<float> value(0.0F, 100.0F);
  double worst = 0.0;
  for (std::size_t n = 0; n < kResampleFrames; ++n) {
    const std::size_t factor = 2 + gen() % 3;
    const std::size_t h = factor * (1 + gen() % (kResampleMaxSide / factor));
    const std::size_t w = factor * (1 + gen() % (kResampleMaxSide / factor));
    RealFrame f(1 + gen() % 3, h, w);
    for (auto& v : f.data()) v = value(gen);
    for (const auto m : {Interpolation::Nearest, Interpolation::Bilinear, Interpolation::Bicubic}) {
      const auto got = downscale(f, factor, m);
      const auto want = oracle::naive_downscale(f, static_cast<int>(factor), m);
      c.require(got.shape() == want.shape(), "shape mismatch");
      for (std::size_t i = 0; i < got.size() && c.out.pass; ++i) {
        const double a = got.data()[i];
        const double b = want.data()[i];
        const double rel = std::abs(a - b) / std::max(1.0, std::abs(b));
        worst = std::max(worst, rel);
        c.require(rel <= kResampleRelTol, fmt::format("frame {} {}x{} f={}: {} vs {}", n, h, w, factor, a, b));
      }
    }
  }
  if (c.out.pass) c.out.detail = fmt::format("{} frames x 3 methods, worst rel err {:.2e}", kResampleFrames, worst);
  return c.out;
}

// -- 5 ---------------------------------------------------------------------
Outcome augmentation() {
  Checker c;
  std::mt19937_64 gen(5);

  // double hflip
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t h = 1 + gen() % 64, w = 1 + gen() % 64;
    CountFrame f(2, h, w);
    for (auto& v : f.data()) v = static_cast<std::uint16_t>(gen() % 1000);
    SampledAugmentation flip;
    flip.size = {w, h};
    flip.geometric.hflip = true;
    flip.geometric.transform = AffineTransform::hflip(static_cast<double>(w));
    c.require(apply_to_frame(apply_to_frame(f, flip), flip) == f, "double hflip is not the identity");
    const RealFrame r = tensor_cast<float>(f);
    c.require(apply_to_frame(apply_to_frame(r, flip), flip) == r, "double hflip (real) is not the identity");
  }

  // box vs warped mask
  AugmentConfig geo;
  geo.erasure_p = 0.0;
  geo.min_box_area = 0.0;
  geo.min_box_visibility = 0.0;
  const ImageSize size{304, 240};
  double worst_iou = 1.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
  for (std::uint64_t s = 0; evaluated < kMaskRectangles; ++s) {
    const std::size_t w = 32 + gen() % 97, h = 32 + gen() % 97;
    const std::size_t x = gen() % (size.width - w + 1), y = gen() % (size.height - h + 1);
    RealFrame mask(1, size.height, size.width);
    for (std::size_t yy = y; yy < y + h; ++yy) {
      for (std::size_t xx = x; xx < x + w; ++xx) mask(0, yy, xx) = 1.0F;
    }
    const auto aug = sample_augmentation(geo, size, Rng(s));
    // Only results that stay inside the frame are comparable: clipping a hull
    // is not the same as bounding the visible part of a rotated shape.
    double minx = 1e9, miny = 1e9, maxx = -1e9, maxy = -1e9;
    for (const auto& [cx, cy] : {std::pair{x, y}, std::pair{x + w, y}, std::pair{x, y + h}, std::pair{x + w, y + h}}) {
      const Point q = aug.geometric.transform.apply({static_cast<double>(cx), static_cast<double>(cy)});
      minx = std::min(minx, q.x);
      miny = std::min(miny, q.y);
      maxx = std::max(maxx, q.x);
      maxy = std::max(maxy, q.y);
    }
    if (minx < 0.0 || miny < 0.0 || maxx > size.width || maxy > size.height) {
      ++skipped;
      continue;
    }
    const AnnotatedBox box{0, static_cast<float>(x), static_cast<float>(y), static_cast<float>(w), static_cast<float>(h), 0, 1.0F, {}};
    const auto boxes = apply_to_boxes(std::span(&box, 1), aug, {0.0, 0.0});
    const auto warped = apply_to_frame(mask, aug);
    std::size_t lx = size.width, ly = size.height, hx = 0, hy = 0;
    bool any = false;
    for (std::size_t yy = 0; yy < size.height; ++yy) {
      for (std::size_t xx = 0; xx < size.width; ++xx) {
        if (warped(0, yy, xx) != 0.0F) {
          any = true;
          lx = std::min(lx, xx);
          ly = std::min(ly, yy);
          hx = std::max(hx, xx + 1);
          hy = std::max(hy, yy + 1);
        }
      }
    }
    c.require(boxes.size() == 1 && any, fmt::format("seed {}: in-view rectangle lost", s));
    if (!c.out.pass) break;
    const AnnotatedBox from_mask{0, static_cast<float>(lx), static_cast<float>(ly), static_cast<float>(hx - lx),
                                 static_cast<float>(hy - ly), 0, 1.0F, {}};
    const double v = iou(boxes[0], from_mask);
    worst_iou = std::min(worst_iou, v);
    c.require(v >= kMaskMinIou, fmt::format("seed {}: box/mask IoU {:.4f} ({})", s, v, format_geometric(aug.geometric)));
    ++evaluated;
  }

  // video mode
  AugmentConfig video;
  video.erasure_p = 1.0;
  video.rotation_p = 1.0;
  std::vector<CountFrame> clip_frames(21, CountFrame(2, 48, 64, 3));
  std::size_t distinct_min = 21;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto clip = augment_clip<std::uint16_t>(clip_frames, {}, video, Rng(s));
    std::set<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>> rects;
    for (const auto& d : clip.draws) {
      c.require(d.geometric.transform == clip.draws[0].geometric.transform, "video clip affine differs across frames");
      if (d.erasure) rects.insert({d.erasure->x, d.erasure->y, d.erasure->w, d.erasure->h});
    }
    distinct_min = std::min(distinct_min, rects.size());
    c.require(rects.size() >= 2, fmt::format("seed {}: only {} distinct erasures in 21 frames", s, rects.size()));
  }

  // Monte-Carlo applied rates at the default configuration
  const AugmentConfig defaults;
  std::array<std::size_t, 6> hits{};
  const Rng root(55);
  for (std::uint64_t i = 0; i < kMonteCarloDraws; ++i) {
    const auto a = sample_augmentation(defaults, size, root.split(i));
    hits[0] += a.geometric.hflip;
    hits[1] += a.geometric.rotation_deg.has_value();
    hits[2] += a.geometric.translation_px.has_value();
    hits[3] += a.geometric.scale.has_value();
    hits[4] += a.geometric.shear_deg.has_value();
    hits[5] += a.erasure.has_value();
  }
  const std::array<double, 6> p{defaults.hflip_p, defaults.rotation_p, defaults.translation_p,
                                defaults.scale_p, defaults.shear_p, defaults.erasure_p};
  const char* names[] = {"hflip", "rotate", "translate", "scale", "shear", "erase"};
  std::string rates;
  for (std::size_t k = 0; k < 6; ++k) {
    const double r = static_cast<double>(hits[k]) / kMonteCarloDraws;
    rates += fmt::format(" {}={:.3f}", names[k], r);
    c.require(std::abs(r - p[k]) <= kRateTol, fmt::format("{} rate {:.4f} vs p={}", names[k], r, p[k]));
  }
  if (c.out.pass) {
    c.out.detail = fmt::format("double hflip exact; min box/mask IoU {:.3f} over {} rects ({} skipped: result leaves the frame); "
                               "video affine shared, >= {} distinct erasures; rates{}",
                               worst_iou, evaluated, skipped, distinct_min, rates);
  }
  return c.out;
}

// -- 6 ---------------------------------------------------------------------
Outcome sampler() {
  Checker c;
  std::vector<SequenceIndex> seqs;
  for (int i = 0; i < 10; ++i) seqs.push_back({fmt::format("seq{:02d}", i), 100, {}});
  std::size_t batches_checked = 0;
  for (const std::size_t L : {21u, 10u}) {
    const PlanConfig cfg{L, 4, 4};
    const auto plan = plan_epoch(seqs, cfg, Rng(6 + L));
    std::vector<SequenceIndex> order;
    for (const auto& batch : plan) {
      c.require(batch.size() == 8, fmt::format("batch has {} entries", batch.size()));
      for (std::size_t s = 0; s < batch.size(); ++s) {
        const auto& e = batch[s];
        if (s < 4) {
          c.require(e.random && e.reset_memory, "random entry must reset memory");
        } else {
          c.require(!e.random, "sequential slot holds a random clip");
          c.require(e.reset_memory == (e.idle() || e.start == 0), "sequential reset flag wrong");
          if (!e.idle() && e.start == 0) {
            for (const auto& q : seqs) {
              if (q.id == e.sequence_id) order.push_back(q);
            }
          }
        }
      }
      ++batches_checked;
    }
    c.require(order.size() == seqs.size(), "not every sequence was visited sequentially");
    const auto expected = oracle::cursor_simulation(order, 4, 4, L);
    std::size_t matched = 0;
    for (std::size_t b = 0; b < plan.size(); ++b) {
      for (std::size_t s = 4; s < 8; ++s) {
        const auto it = expected.find({b, s});
        if (it == expected.end()) {
          c.require(plan[b][s].idle(), fmt::format("L={} batch {} slot {} should be idle", L, b, s));
        } else {
          c.require(plan[b][s] == it->second, fmt::format("L={} batch {} slot {} differs from simulation", L, b, s));
          ++matched;
        }
      }
    }
    c.require(matched == expected.size(), "simulation has entries the plan lacks");
  }
  if (c.out.pass) c.out.detail = fmt::format("{} batches of 4+4; coverage equals cursor simulation", batches_checked);
  return c.out;
}

// -- 7 ---------------------------------------------------------------------
Outcome temporal() {
  Checker c;
  Rng rng(7);
  const auto rand_frame = [&](std::size_t ch, std::size_t h, std::size_t w, double s) {
    RealFrame f(ch, h, w);
    for (auto& v : f.data()) v = static_cast<float>(rng.uniform(-s, s));
    return f;
  };

  // zero parameters
  const auto zero = ConvLSTMParams::zeros(6, 6, 3);
  ConvLSTMState st = init_state(8, 10, zero);
  st.cell = rand_frame(6, 8, 10, 3.0);
  st.hidden = rand_frame(6, 8, 10, 1.0);
  const auto step = convlstm_step(rand_frame(6, 8, 10, 1.0), st, zero);
  double worst = 0.0;
  for (std::size_t k = 0; k < st.cell.size(); ++k) {
    const double cc = st.cell.data()[k];
    worst = std::max(worst, std::abs(step.state.cell.data()[k] - 0.5 * cc));
    worst = std::max(worst, std::abs(step.state.hidden.data()[k] - 0.5 * std::tanh(0.5 * cc)));
  }
  c.require(worst <= kAnalyticTol, fmt::format("analytic case off by {:.2e}", worst));

  // Gen1 scales: 256x320 input at strides 8, 16, 32
  const std::array<std::pair<std::size_t, std::size_t>, 3> dims{{{32, 40}, {16, 20}, {8, 10}}};
  const std::size_t D = 8;
  const auto features = [&] {
    std::array<FeatureMap, 3> f;
    for (std::size_t s = 0; s < 3; ++s) f[s] = {kFeatureScales[s], rand_frame(D, dims[s].first, dims[s].second, 1.0)};
    return f;
  };

  // residual identity with zero projection
  TemporalModule fresh;
  for (auto& cell : fresh.cells) cell = random_params(D, 16, 3, rng.split(1));
  const auto f0 = features();
  const auto r0 = residual_update(f0, init_temporal_state(fresh, f0), fresh);
  for (std::size_t s = 0; s < 3; ++s) {
    c.require(r0.features[s].values == f0[s].values, "zero-projection residual changed the features");
    c.require(r0.state[s] && !(r0.state[s]->cell == RealFrame(16, dims[s].first, dims[s].second)),
              "state did not advance");
  }

  // 21-step rollout
  TemporalModule module;
  for (auto& cell : module.cells) cell = random_params(D, 12, 3, rng.split(2), true);
  TemporalState state = init_temporal_state(module, f0);
  for (std::size_t t = 0; t < kRolloutSteps; ++t) {
    const auto in = features();
    const auto r = residual_update(in, state, module);
    for (std::size_t s = 0; s < 3; ++s) {
      const Shape3 want{D, dims[s].first, dims[s].second};
      c.require(r.features[s].values.shape() == want, fmt::format("step {} scale {} feature shape changed", t, s));
      c.require(r.state[s]->hidden.shape() == Shape3{12, want.height, want.width}, "state shape changed");
      for (const float v : r.features[s].values.data()) {
        if (!std::isfinite(v)) {
          c.require(false, fmt::format("step {} produced a non-finite value", t));
          break;
        }
      }
    }
    state = r.state;
  }

  // scalar oracle
  double worst_scalar = 0.0;
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    const std::size_t d = 1 + trial % 4, m = 1 + (trial / 4) % 5;
    const auto p = random_params(d, m, 1, rng.split(100 + trial), true);
    oracle::ScalarLstm ref;
    ref.d = static_cast<int>(d);
    ref.hdim = static_cast<int>(m);
    ref.wx.assign(p.input_weights.begin(), p.input_weights.end());
    ref.wh.assign(p.hidden_weights.begin(), p.hidden_weights.end());
    ref.b.assign(p.bias.begin(), p.bias.end());
    std::vector<double> h(m, 0.0), cell(m, 0.0);
    ConvLSTMState s = init_state(1, 1, p);
    for (int k = 0; k < 8; ++k) {
      const RealFrame x = rand_frame(d, 1, 1, 2.0);
      ref.step(std::vector<double>(x.data().begin(), x.data().end()), h, cell);
      s = convlstm_step(x, s, p).state;
      for (std::size_t j = 0; j < m; ++j) {
        worst_scalar = std::max(worst_scalar, std::abs(s.hidden.data()[j] - h[j]));
        worst_scalar = std::max(worst_scalar, std::abs(s.cell.data()[j] - cell[j]));
      }
    }
  }
  c.require(worst_scalar <= kScalarLstmTol, fmt::format("scalar LSTM off by {:.2e}", worst_scalar));
  if (c.out.pass) {
    c.out.detail = fmt::format("analytic err {:.1e}; zero-projection identity exact; {}-step rollout stable; "
                               "scalar err {:.1e}",
                               worst, kRolloutSteps, worst_scalar);
  }
  return c.out;
}

// -- 8 ---------------------------------------------------------------------
std::pair<std::vector<AnnotatedBox>, std::vector<AnnotatedBox>> random_dataset(std::mt19937_64& gen) {
  std::uniform_real_distribution<float> pos(0.0F, 280.0F);
  std::uniform_real_distribution<float> size(6.0F, 70.0F);
  std::uniform_real_distribution<float> jitter(-8.0F, 8.0F);
  std::uniform_real_distribution<float> unit(0.0F, 1.0F);
  std::vector<AnnotatedBox> gts, preds;
  for (std::size_t i = 0; i < kMapBoxes; ++i) {
    const AnnotatedBox g{(gen() % 12) * 50'000, pos(gen), pos(gen), size(gen), size(gen),
                         static_cast<std::uint8_t>(gen() % 3), 1.0F, {}};
    gts.push_back(g);
    if (unit(gen) < 0.75F) {
      AnnotatedBox p = g;
      p.x += jitter(gen);
      p.y += jitter(gen);
      p.h = std::max(1.0F, p.h + jitter(gen));
      p.score = unit(gen);
      preds.push_back(p);
    }
    if (unit(gen) < 0.35F) {
      preds.push_back({(gen() % 12) * 50'000, pos(gen), pos(gen), size(gen), size(gen),
                       static_cast<std::uint8_t>(gen() % 3), unit(gen), {}});
    }
  }
  return {preds, gts};
}

Outcome map_metric() {
  Checker c;
  const EvalConfig cfg = EvalConfig::coco();
  std::mt19937_64 gen(8);
  const auto [p0, g0] = random_dataset(gen);
  const auto perfect = evaluate(g0, g0, cfg);
  c.require(perfect.map == 1.0 && perfect.map50 == 1.0 && perfect.map75 == 1.0, "perfect predictions are not 1.0");
  const auto empty = evaluate({}, g0, cfg);
  c.require(empty.map == 0.0 && empty.map50 == 0.0, "empty predictions are not 0.0");
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < kMapSeeds; ++seed) {
    std::mt19937_64 g(1000 + seed);
    const auto [preds, gts] = random_dataset(g);
    const auto r = evaluate(preds, gts, cfg);
    const auto [m, m50, m75] = oracle::slow_map(preds, gts);
    const double err = std::max({std::abs(r.map - m), std::abs(r.map50 - m50), std::abs(r.map75 - m75)});
    worst = std::max(worst, err);
    c.require(err <= kMapTol, fmt::format("seed {}: differs from slow evaluator by {:.2e}", seed, err));
    c.require(r.map50 >= r.map, fmt::format("seed {}: mAP50 {} < mAP {}", seed, r.map50, r.map));
  }
  if (c.out.pass) c.out.detail = fmt::format("perfect=1, empty=0, {} seeds max diff {:.1e}", kMapSeeds, worst);
  return c.out;
}

// -- 9 ---------------------------------------------------------------------
Outcome throughput() {
  Checker c;
  std::mt19937_64 gen(9);
  const Micros duration = 10'000'000;  // 10 s -> 200 windows of 50 ms
  std::vector<Event> raw;
  raw.reserve(kThroughputEvents);
  const std::size_t per_window = kThroughputEvents / 200;
  for (Micros t0 = 0; t0 < duration; t0 += 50'000) {
    auto w = sorted_window_events(gen, per_window, kGen1Geometry, t0, 50'000);
    raw.insert(raw.end(), w.begin(), w.end());
  }
  const fs::path dir = fs::temp_directory_path() / "evkit_acceptance_throughput";
  fs::create_directories(dir);
  write_file(dir / "big.dat", encode_dat(validate_stream(std::move(raw), kGen1Geometry)));

  const auto start = std::chrono::steady_clock::now();
  const EventStream stream = read_recording(dir / "big.dat");
  const StackedHistogramConfig cfg;
  std::size_t accumulated = 0;
  for (const auto& w : partition_windows(stream, cfg.t_frame)) {
    const CountFrame f = stacked_histogram(stream.events().subspan(w.begin, w.count()), stream.geometry(), w.window, cfg);
    accumulated += f.size() > 0 ? w.count() : 0;
  }
  const double secs = seconds_since(start);
  const double rate = static_cast<double>(accumulated) / secs;
  c.require(accumulated == kThroughputEvents, "not every event was accumulated");
  c.require(rate >= kMinEventsPerSecond, fmt::format("{:.2f} M events/s", rate / 1e6));

  // cmd_convert reports its own measured rate
  PipelineConfig pc;
  const auto summary = cmd_convert(kFixtures / "recording.dat", dir / "frames", pc);
  c.require(summary.events_per_second > 0.0, "cmd_convert did not report a rate");
  fs::remove_all(dir);
  if (c.out.pass) {
    c.out.detail = fmt::format("{} events in {:.3f} s = {:.1f} M events/s (single thread); convert reports {:.0f} events/s",
                               kThroughputEvents, secs, rate / 1e6, summary.events_per_second);
  }
  return c.out;
}

// -- 10 --------------------------------------------------------------------
std::map<std::string, std::uint64_t> end_to_end_run(const fs::path& root) {
  fs::remove_all(root);
  fs::create_directories(root);
  PipelineConfig cfg;
  cfg.seed = 1234;
  cfg.threads = 2;
  cfg.plan.clip_length = 7;
  cmd_convert(kFixtures / "recording.dat", root / "frames", cfg, kFixtures / "gt.txt");
  cmd_augment(root / "frames", root / "aug_frame", cfg, AugmentMode::Frame);
  cmd_augment(root / "frames", root / "aug_video", cfg, AugmentMode::Video);
  std::ofstream(root / "report.txt") << format_report(cmd_evaluate(kFixtures / "pred.txt", kFixtures / "gt.txt", cfg));
  return hash_tree(root);
}

Outcome determinism() {
  Checker c;
  const fs::path base = fs::temp_directory_path() / "evkit_acceptance_e2e";
  const auto a = end_to_end_run(base / "run1");
  const auto b = end_to_end_run(base / "run2");
  c.require(a.size() > 40, fmt::format("only {} output files", a.size()));
  c.require(a == b, "outputs differ between runs");
  std::uint64_t combined = 0xcbf29ce484222325ULL;
  for (const auto& [name, h] : a) combined = (combined ^ h) * 0x100000001b3ULL;
  fs::remove_all(base);
  if (c.out.pass) c.out.detail = fmt::format("{} files identical across two runs (digest {:016x})", a.size(), combined);
  return c.out;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"conservation", conservation}, {"shape pipeline", shape_pipeline}, {"codec", codec},
      {"resampling oracle", resampling}, {"augmentation", augmentation}, {"sampler", sampler},
      {"temporal module", temporal}, {"mAP", map_metric}, {"throughput", throughput},
      {"end-to-end determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
