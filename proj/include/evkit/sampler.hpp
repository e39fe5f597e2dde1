#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "evkit/rng.hpp"

namespace evkit {

struct SequenceIndex {
  std::string id;
  std::size_t frame_count = 0;
  /// Optional; empty means unknown.
  std::vector<bool> annotated;
};

/// One clip of a batch. Frames [start, start + length) are requested;
/// the last `pad` of them lie past the end of the sequence and must be
/// masked by the consumer. An idle sequential slot emits a fully padded
/// entry (empty sequence id, pad == length).
struct ClipEntry {
  std::string sequence_id;
  std::size_t start = 0;
  std::size_t length = 0;
  std::size_t pad = 0;
  bool reset_memory = true;
  bool random = false;
  std::size_t slot = 0;

  std::size_t valid_frames() const noexcept { return length - pad; }
  bool idle() const noexcept { return pad == length; }

  friend bool operator==(const ClipEntry&, const ClipEntry&) = default;
};

/// Random entries first (slots 0..n_random-1), then sequential entries
/// (slots n_random..n_random+n_sequential-1).
using ClipBatch = std::vector<ClipEntry>;

struct PlanConfig {
  std::size_t clip_length = 21;
  std::size_t n_random = 4;
  std::size_t n_sequential = 4;
};

/// One epoch of recurrent-training batches.
///
/// Sequential slots walk a shuffled order of all sequences; each slot advances
/// its cursor by clip_length per batch and pulls the next unvisited sequence
/// when its current one ends, resetting memory only then. The epoch ends once
/// every sequential slot is exhausted; slots that run dry earlier emit idle
/// entries so every batch keeps n_random + n_sequential entries. Random entries
/// pick a sequence and start uniformly (with replacement) and always reset.
///
/// With n_sequential == 0 the epoch has ceil(total clips / n_random) batches.
/// Throws EmptyDataset if there are no sequences or no frames, InvalidArgument
/// if clip_length == 0 or both counts are zero.
std::vector<ClipBatch> plan_epoch(std::span<const SequenceIndex> sequences, const PlanConfig& cfg,
                                  const Rng& rng);

// Line formats.
//   index: seq=<id> frames=<n> [annotated=<0/1 string>]
//   plan:  batch=<b> slot=<s> seq=<id|-> start=<n> len=<L> pad=<k> reset=<0|1> kind=<random|sequential>
std::vector<SequenceIndex> read_sequence_index(std::istream& in);
std::vector<SequenceIndex> read_sequence_index(const std::filesystem::path& path);
void write_plan(std::ostream& out, std::span<const ClipBatch> batches);
std::vector<ClipBatch> read_plan(std::istream& in);

}  // namespace evkit
