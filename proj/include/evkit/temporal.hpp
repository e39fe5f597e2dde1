#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "evkit/codec.hpp"
#include "evkit/rng.hpp"
#include "evkit/tensor.hpp"

namespace evkit {

/// Encoder feature map of shape (D, h, w) at stride 2^scale (scale 3, 4 or 5).
struct FeatureMap {
  int scale = 3;
  RealFrame values;
};

/// Gate blocks are stacked in the order i, f, g, o along the output axis.
struct ConvLSTMParams {
  std::size_t kernel = 3;
  std::size_t input_dim = 0;   // D
  std::size_t hidden_dim = 0;  // M

  std::vector<float> input_weights;   // [4M, D, k, k]
  std::vector<float> hidden_weights;  // [4M, M, k, k]
  std::vector<float> bias;            // [4M]
  /// 1x1 projection back to D channels, present exactly when M != D.
  std::vector<float> projection;       // [D, M]
  std::vector<float> projection_bias;  // [D]

  bool has_projection() const noexcept { return hidden_dim != input_dim; }
  std::size_t output_dim() const noexcept { return input_dim; }

  /// All-zero parameters of the right shapes.
  static ConvLSTMParams zeros(std::size_t input_dim, std::size_t hidden_dim, std::size_t kernel);
};

/// Throws InvalidArgument for an even kernel or zero dims, ShapeMismatch for
/// inconsistent tensor sizes.
void validate(const ConvLSTMParams& params);

/// Gate weights and biases uniform in +-1/sqrt(fan_in). The projection stays
/// zero unless `random_projection` is set, so a freshly inserted module adds
/// nothing to the features it updates.
ConvLSTMParams random_params(std::size_t input_dim, std::size_t hidden_dim, std::size_t kernel,
                             Rng rng, bool random_projection = false);

struct ConvLSTMState {
  RealFrame hidden;  // (M, h, w)
  RealFrame cell;    // (M, h, w)

  friend bool operator==(const ConvLSTMState&, const ConvLSTMState&) = default;
};

/// Zero hidden and cell state; also the memory reset.
ConvLSTMState init_state(std::size_t height, std::size_t width, const ConvLSTMParams& params);

/// Post-activation gates (4M, h, w): sigmoid for i, f, o and tanh for g.
RealFrame gate_activations(const RealFrame& input, const ConvLSTMState& state,
                           const ConvLSTMParams& params);

struct StepResult {
  RealFrame output;  // (D, h, w): h' or its projection
  ConvLSTMState state;
};

/// One ConvLSTM step with same-padded convolutions, no peepholes:
///   c' = f * c + i * g,  h' = o * tanh(c').
/// Throws ShapeMismatch if input or state disagree with the params.
StepResult convlstm_step(const RealFrame& input, const ConvLSTMState& state,
                         const ConvLSTMParams& params);

inline constexpr std::array<int, 3> kFeatureScales{3, 4, 5};

/// Three optional cells for E3, E4, E5 plus a placement mask.
struct TemporalModule {
  std::array<std::optional<ConvLSTMParams>, 3> cells;
  std::array<bool, 3> mask{true, true, true};
};

using TemporalState = std::array<std::optional<ConvLSTMState>, 3>;

/// Zero state for every masked-on scale.
TemporalState init_temporal_state(const TemporalModule& module, const std::array<FeatureMap, 3>& features);

struct ResidualResult {
  std::array<FeatureMap, 3> features;
  TemporalState state;
};

/// For each masked-on scale: (O, M') = R(E, M), E <- E + O. Masked-off scales
/// and their state pass through untouched. A missing state is treated as a reset.
ResidualResult residual_update(const std::array<FeatureMap, 3>& features, const TemporalState& state,
                               const TemporalModule& module);

// ---------------------------------------------------------------------------
// Parameter / state files: a flat little-endian f32 blob plus a text manifest,
// one line per tensor: name=<name> shape=<d0,d1,...> offset=<element offset>
// The manifest may start with metadata lines beginning with "meta ".
// ---------------------------------------------------------------------------

struct NamedTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> values;
};

struct TensorBundle {
  std::vector<std::string> meta;
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(std::string_view name) const;
};

void write_bundle(const std::filesystem::path& blob, const std::filesystem::path& manifest,
                  const TensorBundle& bundle);
TensorBundle read_bundle(const std::filesystem::path& blob, const std::filesystem::path& manifest);

void append_params(TensorBundle& bundle, const std::string& prefix, const ConvLSTMParams& params);
ConvLSTMParams extract_params(const TensorBundle& bundle, const std::string& prefix);

void append_state(TensorBundle& bundle, const std::string& prefix, const ConvLSTMState& state);
ConvLSTMState extract_state(const TensorBundle& bundle, const std::string& prefix);

/// Bundle layout for a whole module: cells under "e3.", "e4.", "e5." and a
/// "meta mask=<0|1><0|1><0|1>" line.
TensorBundle module_to_bundle(const TemporalModule& module);
TemporalModule module_from_bundle(const TensorBundle& bundle);

}  // namespace evkit
