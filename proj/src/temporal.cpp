#include "evkit/temporal.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/core.h>
#include <fmt/ranges.h>

#include "evkit/error.hpp"

namespace evkit {

ConvLSTMParams ConvLSTMParams::zeros(std::size_t input_dim, std::size_t hidden_dim,
                                     std::size_t kernel) {
  ConvLSTMParams p;
  p.kernel = kernel;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  const std::size_t kk = kernel * kernel;
  p.input_weights.assign(4 * hidden_dim * input_dim * kk, 0.0F);
  p.hidden_weights.assign(4 * hidden_dim * hidden_dim * kk, 0.0F);
  p.bias.assign(4 * hidden_dim, 0.0F);
  if (p.has_projection()) {
    p.projection.assign(input_dim * hidden_dim, 0.0F);
    p.projection_bias.assign(input_dim, 0.0F);
  }
  return p;
}

void validate(const ConvLSTMParams& p) {
  if (p.kernel % 2 == 0) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("kernel size {} must be odd", p.kernel));
  }
  if (p.input_dim == 0 || p.hidden_dim == 0) {
    throw Error(ErrorCode::InvalidArgument, "ConvLSTM dims must be at least 1");
  }
  const std::size_t kk = p.kernel * p.kernel;
  const auto check = [](std::size_t got, std::size_t want, const char* name) {
    if (got != want) {
      throw Error(ErrorCode::ShapeMismatch,
                  fmt::format("{} has {} values, expected {}", name, got, want));
    }
  };
  check(p.input_weights.size(), 4 * p.hidden_dim * p.input_dim * kk, "input_weights");
  check(p.hidden_weights.size(), 4 * p.hidden_dim * p.hidden_dim * kk, "hidden_weights");
  check(p.bias.size(), 4 * p.hidden_dim, "bias");
  check(p.projection.size(), p.has_projection() ? p.input_dim * p.hidden_dim : 0, "projection");
  check(p.projection_bias.size(), p.has_projection() ? p.input_dim : 0, "projection_bias");
}

ConvLSTMParams random_params(std::size_t input_dim, std::size_t hidden_dim, std::size_t kernel,
                             Rng rng, bool random_projection) {
  ConvLSTMParams p = ConvLSTMParams::zeros(input_dim, hidden_dim, kernel);
  const double fan_in = static_cast<double>((input_dim + hidden_dim) * kernel * kernel);
  const double bound = 1.0 / std::sqrt(fan_in);
  const auto fill = [&](std::vector<float>& v, double b) {
    for (float& x : v) x = static_cast<float>(rng.uniform(-b, b));
  };
  fill(p.input_weights, bound);
  fill(p.hidden_weights, bound);
  fill(p.bias, bound);
  if (random_projection && p.has_projection()) {
    const double pb = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    fill(p.projection, pb);
    fill(p.projection_bias, pb);
  }
  return p;
}

ConvLSTMState init_state(std::size_t height, std::size_t width, const ConvLSTMParams& params) {
  return {RealFrame(params.hidden_dim, height, width), RealFrame(params.hidden_dim, height, width)};
}

namespace {

/// out[o] += sum_c sum_(ky,kx) weights[o, c, ky, kx] * in[c, y + ky - r, x + kx - r], zero padded.
void conv_same_accumulate(const RealFrame& in, std::span<const float> weights, std::size_t kernel,
                          RealFrame& out) {
  const std::size_t cin = in.channels();
  const std::size_t h = in.height();
  const std::size_t w = in.width();
  const auto r = static_cast<std::ptrdiff_t>(kernel / 2);
  const auto ih = static_cast<std::ptrdiff_t>(h);
  const auto iw = static_cast<std::ptrdiff_t>(w);
  for (std::size_t o = 0; o < out.channels(); ++o) {
    auto dst = out.channel(o);
    for (std::size_t c = 0; c < cin; ++c) {
      const auto src = in.channel(c);
      for (std::size_t ky = 0; ky < kernel; ++ky) {
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - r;
        for (std::size_t kx = 0; kx < kernel; ++kx) {
          const float wt = weights[((o * cin + c) * kernel + ky) * kernel + kx];
          if (wt == 0.0F) continue;
          const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - r;
          const std::ptrdiff_t y_lo = std::max<std::ptrdiff_t>(0, -dy);
          const std::ptrdiff_t y_hi = std::min<std::ptrdiff_t>(ih, ih - dy);
          const std::ptrdiff_t x_lo = std::max<std::ptrdiff_t>(0, -dx);
          const std::ptrdiff_t x_hi = std::min<std::ptrdiff_t>(iw, iw - dx);
          for (std::ptrdiff_t y = y_lo; y < y_hi; ++y) {
            float* drow = dst.data() + y * iw;
            const float* srow = src.data() + (y + dy) * iw + dx;
            for (std::ptrdiff_t x = x_lo; x < x_hi; ++x) drow[x] += wt * srow[x];
          }
        }
      }
    }
  }
}

float sigmoid(float z) { return static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(z)))); }
float tanh_f(float z) { return static_cast<float>(std::tanh(static_cast<double>(z))); }

void check_shapes(const RealFrame& input, const ConvLSTMState& state, const ConvLSTMParams& p) {
  validate(p);
  if (input.channels() != p.input_dim) {
    throw Error(ErrorCode::ShapeMismatch, fmt::format("input has {} channels, cell expects {}",
                                                      input.channels(), p.input_dim));
  }
  const Shape3 want{p.hidden_dim, input.height(), input.width()};
  if (state.hidden.shape() != want || state.cell.shape() != want) {
    throw Error(ErrorCode::ShapeMismatch,
                fmt::format("state shape ({}, {}, {}) does not match ({}, {}, {})",
                            state.hidden.channels(), state.hidden.height(), state.hidden.width(),
                            want.channels, want.height, want.width));
  }
}

}  // namespace

RealFrame gate_activations(const RealFrame& input, const ConvLSTMState& state,
                           const ConvLSTMParams& p) {
  check_shapes(input, state, p);
  const std::size_t m = p.hidden_dim;
  RealFrame gates(4 * m, input.height(), input.width());
  for (std::size_t o = 0; o < 4 * m; ++o) {
    auto ch = gates.channel(o);
    std::fill(ch.begin(), ch.end(), p.bias[o]);
  }
  conv_same_accumulate(input, p.input_weights, p.kernel, gates);
  conv_same_accumulate(state.hidden, p.hidden_weights, p.kernel, gates);
  for (std::size_t o = 0; o < 4 * m; ++o) {
    const bool candidate = o / m == 2;  // g block
    for (float& z : gates.channel(o)) z = candidate ? tanh_f(z) : sigmoid(z);
  }
  return gates;
}

StepResult convlstm_step(const RealFrame& input, const ConvLSTMState& state,
                         const ConvLSTMParams& p) {
  const RealFrame gates = gate_activations(input, state, p);
  const std::size_t m = p.hidden_dim;
  const std::size_t plane = input.height() * input.width();
  StepResult result{RealFrame(), init_state(input.height(), input.width(), p)};
  const auto g = gates.data();
  const auto c_prev = state.cell.data();
  auto c_next = result.state.cell.data();
  auto h_next = result.state.hidden.data();
  for (std::size_t ch = 0; ch < m; ++ch) {
    for (std::size_t k = 0; k < plane; ++k) {
      const std::size_t at = ch * plane + k;
      const float i = g[(0 * m + ch) * plane + k];
      const float f = g[(1 * m + ch) * plane + k];
      const float cand = g[(2 * m + ch) * plane + k];
      const float o = g[(3 * m + ch) * plane + k];
      c_next[at] = f * c_prev[at] + i * cand;
      h_next[at] = o * tanh_f(c_next[at]);
    }
  }
  if (!p.has_projection()) {
    result.output = result.state.hidden;
    return result;
  }
  result.output = RealFrame(p.input_dim, input.height(), input.width());
  for (std::size_t d = 0; d < p.input_dim; ++d) {
    auto dst = result.output.channel(d);
    std::fill(dst.begin(), dst.end(), p.projection_bias[d]);
    for (std::size_t ch = 0; ch < m; ++ch) {
      const float wt = p.projection[d * m + ch];
      if (wt == 0.0F) continue;
      const auto src = result.state.hidden.channel(ch);
      for (std::size_t k = 0; k < plane; ++k) dst[k] += wt * src[k];
    }
  }
  return result;
}

TemporalState init_temporal_state(const TemporalModule& module,
                                  const std::array<FeatureMap, 3>& features) {
  TemporalState state;
  for (std::size_t s = 0; s < 3; ++s) {
    if (module.mask[s] && module.cells[s]) {
      state[s] = init_state(features[s].values.height(), features[s].values.width(), *module.cells[s]);
    }
  }
  return state;
}

ResidualResult residual_update(const std::array<FeatureMap, 3>& features, const TemporalState& state,
                               const TemporalModule& module) {
  ResidualResult result{features, state};
  for (std::size_t s = 0; s < 3; ++s) {
    if (!module.mask[s]) continue;
    if (!module.cells[s]) {
      throw Error(ErrorCode::ShapeMismatch,
                  fmt::format("scale E{} is enabled but has no cell", kFeatureScales[s]));
    }
    const ConvLSTMParams& params = *module.cells[s];
    const RealFrame& e = features[s].values;
    const ConvLSTMState prev = state[s] ? *state[s] : init_state(e.height(), e.width(), params);
    StepResult step = convlstm_step(e, prev, params);
    auto dst = result.features[s].values.data();
    const auto add = step.output.data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += add[k];
    result.state[s] = std::move(step.state);
  }
  return result;
}

// ---------------------------------------------------------------------------

const NamedTensor* TensorBundle::find(std::string_view name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void write_bundle(const std::filesystem::path& blob, const std::filesystem::path& manifest,
                  const TensorBundle& bundle) {
  Bytes bytes;
  std::string text;
  for (const auto& m : bundle.meta) text += "meta " + m + "\n";
  std::size_t offset = 0;
  for (const auto& t : bundle.tensors) {
    std::size_t count = 1;
    for (const auto d : t.shape) count *= d;
    if (count != t.values.size()) {
      throw Error(ErrorCode::ShapeMismatch,
                  fmt::format("tensor '{}' has {} values for shape {}", t.name, t.values.size(),
                              fmt::join(t.shape, ",")));
    }
    text += fmt::format("name={} shape={} offset={}\n", t.name, fmt::join(t.shape, ","), offset);
    for (const float v : t.values) le::put_u32(bytes, std::bit_cast<std::uint32_t>(v));
    offset += count;
  }
  write_file(blob, bytes);
  std::ofstream out(manifest, std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoError, fmt::format("cannot create '{}'", manifest.string()));
  }
  out << text;
}

TensorBundle read_bundle(const std::filesystem::path& blob, const std::filesystem::path& manifest) {
  const Bytes bytes = read_file(blob);
  if (bytes.size() % 4 != 0) {
    throw Error(ErrorCode::TruncatedFile, "parameter blob is not a whole number of f32 values",
                bytes.size());
  }
  std::ifstream in(manifest);
  if (!in) {
    throw Error(ErrorCode::IoError, fmt::format("cannot open '{}'", manifest.string()));
  }
  TensorBundle bundle;
  std::string line;
  std::size_t number = 0;
  const std::size_t total = bytes.size() / 4;
  const auto fail = [&](const std::string& why) {
    return Error(ErrorCode::ParseError, fmt::format("manifest line {}: {}", number, why), number);
  };
  const auto parse_size = [&](std::string_view s) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw fail(fmt::format("bad number '{}'", s));
    return v;
  };
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    if (line.rfind("meta ", 0) == 0) {
      bundle.meta.push_back(line.substr(5));
      continue;
    }
    std::istringstream tokens(line);
    std::string token;
    NamedTensor t;
    std::optional<std::size_t> offset;
    bool have_shape = false;
    while (tokens >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos) throw fail("expected key=value");
      const std::string key = token.substr(0, eq);
      const std::string_view value = std::string_view(token).substr(eq + 1);
      if (key == "name") {
        t.name = value;
      } else if (key == "shape") {
        have_shape = true;
        std::size_t start = 0;
        while (start <= value.size()) {
          const auto comma = value.find(',', start);
          const auto piece = value.substr(start, comma == std::string_view::npos ? value.npos : comma - start);
          if (!piece.empty()) t.shape.push_back(parse_size(piece));
          if (comma == std::string_view::npos) break;
          start = comma + 1;
        }
      } else if (key == "offset") {
        offset = parse_size(value);
      } else {
        throw fail(fmt::format("unknown key '{}'", key));
      }
    }
    if (t.name.empty() || !have_shape || !offset) throw fail("need name, shape and offset");
    std::size_t count = 1;
    for (const auto d : t.shape) count *= d;
    if (*offset > total || count > total - *offset) {
      throw Error(ErrorCode::TruncatedFile,
                  fmt::format("tensor '{}' runs past the end of the blob", t.name), number);
    }
    t.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      t.values[i] = std::bit_cast<float>(le::get_u32(bytes.data() + 4 * (*offset + i)));
    }
    bundle.tensors.push_back(std::move(t));
  }
  return bundle;
}

void append_params(TensorBundle& bundle, const std::string& prefix, const ConvLSTMParams& p) {
  validate(p);
  const std::size_t m4 = 4 * p.hidden_dim;
  const std::size_t k = p.kernel;
  bundle.tensors.push_back({prefix + "input_weights", {m4, p.input_dim, k, k}, p.input_weights});
  bundle.tensors.push_back({prefix + "hidden_weights", {m4, p.hidden_dim, k, k}, p.hidden_weights});
  bundle.tensors.push_back({prefix + "bias", {m4}, p.bias});
  if (p.has_projection()) {
    bundle.tensors.push_back({prefix + "projection", {p.input_dim, p.hidden_dim}, p.projection});
    bundle.tensors.push_back({prefix + "projection_bias", {p.input_dim}, p.projection_bias});
  }
}

ConvLSTMParams extract_params(const TensorBundle& bundle, const std::string& prefix) {
  const auto need = [&](const std::string& name) -> const NamedTensor& {
    const NamedTensor* t = bundle.find(prefix + name);
    if (t == nullptr) {
      throw Error(ErrorCode::ParseError, fmt::format("missing tensor '{}{}'", prefix, name));
    }
    return *t;
  };
  const NamedTensor& wx = need("input_weights");
  const NamedTensor& wh = need("hidden_weights");
  if (wx.shape.size() != 4 || wh.shape.size() != 4 || wx.shape[0] % 4 != 0) {
    throw Error(ErrorCode::ShapeMismatch, fmt::format("bad ConvLSTM weight shapes under '{}'", prefix));
  }
  ConvLSTMParams p;
  p.hidden_dim = wx.shape[0] / 4;
  p.input_dim = wx.shape[1];
  p.kernel = wx.shape[2];
  p.input_weights = wx.values;
  p.hidden_weights = wh.values;
  p.bias = need("bias").values;
  if (p.has_projection()) {
    p.projection = need("projection").values;
    p.projection_bias = need("projection_bias").values;
  }
  validate(p);
  return p;
}

void append_state(TensorBundle& bundle, const std::string& prefix, const ConvLSTMState& state) {
  const auto& s = state.hidden.shape();
  bundle.tensors.push_back({prefix + "hidden", {s.channels, s.height, s.width},
                            {state.hidden.data().begin(), state.hidden.data().end()}});
  bundle.tensors.push_back({prefix + "cell", {s.channels, s.height, s.width},
                            {state.cell.data().begin(), state.cell.data().end()}});
}

ConvLSTMState extract_state(const TensorBundle& bundle, const std::string& prefix) {
  const auto load = [&](const std::string& name) {
    const NamedTensor* t = bundle.find(prefix + name);
    if (t == nullptr || t->shape.size() != 3) {
      throw Error(ErrorCode::ParseError, fmt::format("missing 3-d tensor '{}{}'", prefix, name));
    }
    RealFrame f(t->shape[0], t->shape[1], t->shape[2]);
    std::copy(t->values.begin(), t->values.end(), f.data().begin());
    return f;
  };
  ConvLSTMState state{load("hidden"), load("cell")};
  if (state.hidden.shape() != state.cell.shape()) {
    throw Error(ErrorCode::ShapeMismatch, "hidden and cell shapes differ");
  }
  return state;
}

TensorBundle module_to_bundle(const TemporalModule& module) {
  TensorBundle bundle;
  bundle.meta.push_back(fmt::format("mask={}{}{}", module.mask[0] ? 1 : 0, module.mask[1] ? 1 : 0,
                                    module.mask[2] ? 1 : 0));
  for (std::size_t s = 0; s < 3; ++s) {
    if (module.cells[s]) append_params(bundle, fmt::format("e{}.", kFeatureScales[s]), *module.cells[s]);
  }
  return bundle;
}

TemporalModule module_from_bundle(const TensorBundle& bundle) {
  TemporalModule module;
  for (const auto& m : bundle.meta) {
    if (m.rfind("mask=", 0) == 0 && m.size() == 8) {
      for (std::size_t s = 0; s < 3; ++s) module.mask[s] = m[5 + s] == '1';
    }
  }
  for (std::size_t s = 0; s < 3; ++s) {
    const std::string prefix = fmt::format("e{}.", kFeatureScales[s]);
    if (bundle.find(prefix + "input_weights") != nullptr) {
      module.cells[s] = extract_params(bundle, prefix);
    }
  }
  return module;
}

}  // namespace evkit
