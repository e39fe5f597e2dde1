#include "evkit/sampler.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

#include <fmt/core.h>

#include "evkit/error.hpp"

namespace evkit {
namespace {

struct SlotState {
  std::optional<std::size_t> sequence;
  std::size_t cursor = 0;
};

ClipEntry make_clip(const SequenceIndex& seq, std::size_t start, std::size_t length,
                    std::size_t slot, bool reset, bool random) {
  ClipEntry e;
  e.sequence_id = seq.id;
  e.start = start;
  e.length = length;
  e.pad = start + length > seq.frame_count ? start + length - seq.frame_count : 0;
  e.reset_memory = reset;
  e.random = random;
  e.slot = slot;
  return e;
}

ClipEntry random_clip(std::span<const SequenceIndex> seqs, std::span<const std::size_t> usable,
                      std::size_t length, std::size_t slot, Rng& rng) {
  const SequenceIndex& seq = seqs[usable[rng.below(usable.size())]];
  const std::size_t positions = seq.frame_count >= length ? seq.frame_count - length + 1 : 1;
  return make_clip(seq, rng.below(positions), length, slot, true, true);
}

}  // namespace

std::vector<ClipBatch> plan_epoch(std::span<const SequenceIndex> sequences, const PlanConfig& cfg,
                                  const Rng& rng) {
  if (cfg.clip_length == 0) {
    throw Error(ErrorCode::InvalidArgument, "clip length must be at least 1");
  }
  if (cfg.n_random == 0 && cfg.n_sequential == 0) {
    throw Error(ErrorCode::InvalidArgument, "a batch needs at least one random or sequential clip");
  }
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    if (sequences[i].frame_count > 0) usable.push_back(i);
  }
  if (usable.empty()) {
    throw Error(ErrorCode::EmptyDataset, "no sequence has any frames");
  }
  const std::size_t length = cfg.clip_length;

  // Fisher-Yates over the usable sequences.
  std::vector<std::size_t> order = usable;
  Rng shuffle_rng = rng.split(1);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[shuffle_rng.below(i)]);
  }
  Rng random_rng = rng.split(2);

  std::vector<ClipBatch> batches;
  if (cfg.n_sequential == 0) {
    std::size_t clips = 0;
    for (const std::size_t i : usable) clips += (sequences[i].frame_count + length - 1) / length;
    const std::size_t n_batches = (clips + cfg.n_random - 1) / cfg.n_random;
    for (std::size_t b = 0; b < n_batches; ++b) {
      ClipBatch batch;
      for (std::size_t s = 0; s < cfg.n_random; ++s) {
        batch.push_back(random_clip(sequences, usable, length, s, random_rng));
      }
      batches.push_back(std::move(batch));
    }
    return batches;
  }

  std::vector<SlotState> slots(cfg.n_sequential);
  std::size_t next_sequence = 0;
  for (;;) {
    ClipBatch sequential;
    bool any_active = false;
    for (std::size_t s = 0; s < slots.size(); ++s) {
      SlotState& slot = slots[s];
      const std::size_t slot_id = cfg.n_random + s;
      bool reset = false;
      if (!slot.sequence || slot.cursor >= sequences[*slot.sequence].frame_count) {
        slot.sequence.reset();
        if (next_sequence < order.size()) {
          slot.sequence = order[next_sequence++];
          slot.cursor = 0;
          reset = true;
        }
      }
      if (!slot.sequence) {
        ClipEntry idle;
        idle.length = length;
        idle.pad = length;
        idle.reset_memory = true;
        idle.slot = slot_id;
        sequential.push_back(std::move(idle));
        continue;
      }
      any_active = true;
      sequential.push_back(
          make_clip(sequences[*slot.sequence], slot.cursor, length, slot_id, reset, false));
      slot.cursor += length;
    }
    if (!any_active) break;

    ClipBatch batch;
    batch.reserve(cfg.n_random + cfg.n_sequential);
    for (std::size_t s = 0; s < cfg.n_random; ++s) {
      batch.push_back(random_clip(sequences, usable, length, s, random_rng));
    }
    std::move(sequential.begin(), sequential.end(), std::back_inserter(batch));
    batches.push_back(std::move(batch));
  }
  return batches;
}

// ---------------------------------------------------------------------------

namespace {

using Fields = std::map<std::string, std::string, std::less<>>;

Fields split_fields(const std::string& line, std::size_t line_number) {
  Fields fields;
  std::istringstream tokens(line);
  std::string token;
  while (tokens >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ParseError,
                  fmt::format("line {}: expected key=value, got '{}'", line_number, token),
                  line_number);
    }
    fields[token.substr(0, eq)] = token.substr(eq + 1);
  }
  return fields;
}

std::size_t field_size(const Fields& f, std::string_view key, std::size_t line_number) {
  const auto it = f.find(key);
  std::size_t v = 0;
  if (it == f.end()) {
    throw Error(ErrorCode::ParseError, fmt::format("line {}: missing '{}'", line_number, key),
                line_number);
  }
  const auto& s = it->second;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::ParseError,
                fmt::format("line {}: bad value '{}' for '{}'", line_number, s, key), line_number);
  }
  return v;
}

const std::string& field_str(const Fields& f, std::string_view key, std::size_t line_number) {
  const auto it = f.find(key);
  if (it == f.end()) {
    throw Error(ErrorCode::ParseError, fmt::format("line {}: missing '{}'", line_number, key),
                line_number);
  }
  return it->second;
}

bool skip_line(const std::string& line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}

}  // namespace

std::vector<SequenceIndex> read_sequence_index(std::istream& in) {
  std::vector<SequenceIndex> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (skip_line(line)) continue;
    const Fields f = split_fields(line, number);
    SequenceIndex seq;
    seq.id = field_str(f, "seq", number);
    seq.frame_count = field_size(f, "frames", number);
    if (const auto it = f.find("annotated"); it != f.end()) {
      for (const char c : it->second) {
        if (c != '0' && c != '1') {
          throw Error(ErrorCode::ParseError,
                      fmt::format("line {}: annotated flags must be 0/1", number), number);
        }
        seq.annotated.push_back(c == '1');
      }
      if (seq.annotated.size() != seq.frame_count) {
        throw Error(ErrorCode::ParseError,
                    fmt::format("line {}: {} annotation flags for {} frames", number,
                                seq.annotated.size(), seq.frame_count),
                    number);
      }
    }
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<SequenceIndex> read_sequence_index(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::IoError, fmt::format("cannot open '{}'", path.string()));
  }
  return read_sequence_index(in);
}

void write_plan(std::ostream& out, std::span<const ClipBatch> batches) {
  for (std::size_t b = 0; b < batches.size(); ++b) {
    for (const ClipEntry& e : batches[b]) {
      out << fmt::format("batch={} slot={} seq={} start={} len={} pad={} reset={} kind={}\n", b,
                         e.slot, e.sequence_id.empty() ? "-" : e.sequence_id, e.start, e.length,
                         e.pad, e.reset_memory ? 1 : 0, e.random ? "random" : "sequential");
    }
  }
}

std::vector<ClipBatch> read_plan(std::istream& in) {
  std::vector<ClipBatch> batches;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (skip_line(line)) continue;
    const Fields f = split_fields(line, number);
    const std::size_t b = field_size(f, "batch", number);
    if (b >= batches.size()) batches.resize(b + 1);
    ClipEntry e;
    e.slot = field_size(f, "slot", number);
    e.sequence_id = field_str(f, "seq", number);
    if (e.sequence_id == "-") e.sequence_id.clear();
    e.start = field_size(f, "start", number);
    e.length = field_size(f, "len", number);
    e.pad = field_size(f, "pad", number);
    e.reset_memory = field_size(f, "reset", number) != 0;
    e.random = field_str(f, "kind", number) == "random";
    batches[b].push_back(std::move(e));
  }
  return batches;
}

}  // namespace evkit
