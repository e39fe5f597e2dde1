#include "evkit/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "evkit/error.hpp"
#include "evkit/pipeline.hpp"

namespace evkit {
namespace {

std::size_t threads_from_env() {
  const char* env = std::getenv("EVKIT_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  char* end = nullptr;
  const unsigned long v = std::strtoul(env, &end, 10);
  if (end == env || *end != '\0' || v == 0) {
    throw Error(ErrorCode::ConfigError, fmt::format("EVKIT_THREADS='{}' is not a positive integer", env));
  }
  return static_cast<std::size_t>(v);
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw Error(ErrorCode::IoError, fmt::format("cannot create '{}'", path));
  file << text;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"evkit: event-camera frame building, augmentation, clip planning and detection metrics"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string preset;
  std::optional<std::size_t> threads;
  app.add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "RNG seed");
  app.add_option("--preset", preset, "gen1-like or gen4-like");
  app.add_option("--threads", threads, "worker threads (falls back to EVKIT_THREADS)");

  std::string input;
  std::string output;
  std::string annotations;
  auto* convert = app.add_subcommand("convert", "recording (DAT or EVS) -> EVF frames + index");
  convert->add_option("input", input, "recording")->required();
  convert->add_option("-o,--output", output, "output directory")->required();
  convert->add_option("--annotations", annotations, "ground-truth boxes in sensor coordinates");

  auto* stats = app.add_subcommand("stats", "event count, rate, polarity split, duration");
  stats->add_option("input", input, "recording")->required();

  std::string mode = "frame";
  auto* augment = app.add_subcommand("augment", "augment a converted frame directory");
  augment->add_option("frames", input, "directory written by convert")->required();
  augment->add_option("-o,--output", output, "output directory")->required();
  augment->add_option("--mode", mode, "frame or video")->check(CLI::IsMember({"frame", "video"}));

  std::string pred_path;
  std::string gt_path;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "COCO-style mAP of predictions vs ground truth");
  evaluate_cmd->add_option("--pred", pred_path, "predictions")->required();
  evaluate_cmd->add_option("--gt", gt_path, "ground truth")->required();
  evaluate_cmd->add_option("-o,--output", output, "report file (default stdout)");

  std::optional<std::size_t> clip_length;
  std::optional<std::size_t> n_random;
  std::optional<std::size_t> n_sequential;
  auto* plan = app.add_subcommand("plan", "recurrent-training clip schedule for one epoch");
  plan->add_option("index", input, "sequence index")->required();
  plan->add_option("-o,--output", output, "plan file (default stdout)");
  plan->add_option("--clip-length", clip_length);
  plan->add_option("--n-random", n_random);
  plan->add_option("--n-sequential", n_sequential);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: USAGE: " << e.what() << '\n';
    return 2;
  }

  try {
    PipelineConfig cfg;
    if (!config_path.empty()) load_config_file(cfg, config_path);
    if (!preset.empty()) apply_preset(cfg, preset_by_name(preset));
    if (seed) cfg.seed = *seed;
    if (threads) {
      cfg.threads = *threads;
    } else if (const std::size_t env = threads_from_env(); env > 0) {
      cfg.threads = env;
    }
    if (clip_length) cfg.plan.clip_length = *clip_length;
    if (n_random) cfg.plan.n_random = *n_random;
    if (n_sequential) cfg.plan.n_sequential = *n_sequential;
    validate(cfg);

    if (*convert) {
      std::optional<std::filesystem::path> ann;
      if (!annotations.empty()) ann = annotations;
      const ConvertSummary s = cmd_convert(input, output, cfg, ann);
      out << fmt::format("frames={} events={} seconds={:.3f} rate={:.0f} events/s\n", s.frames, s.events,
                         s.seconds, s.events_per_second);
    } else if (*stats) {
      out << format_stats(cmd_stats(input, cfg));
    } else if (*augment) {
      const auto s = cmd_augment(input, output, cfg, mode == "video" ? AugmentMode::Video : AugmentMode::Frame);
      out << fmt::format("frames={} clips={}\n", s.frames, s.clips);
    } else if (*evaluate_cmd) {
      emit(format_report(cmd_evaluate(pred_path, gt_path, cfg)), output, out);
    } else if (*plan) {
      std::ostringstream text;
      write_plan(text, cmd_plan(input, cfg));
      emit(text.str(), output, out);
    }
  } catch (const Error& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    err << "error: " << error_code_name(e.code()) << ": " << msg << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: INTERNAL: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace evkit
