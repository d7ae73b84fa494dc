#pragma once

// Sequence-level commands behind the command-line tool: frame enhancement,
// temporal smoothing, and both chained. Each command streams frames so only
// one frame (plus one smoothing window) is resident at a time.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "llenhance/frame_io.hpp"
#include "llenhance/generator.hpp"
#include "llenhance/parallel.hpp"
#include "llenhance/patchwork.hpp"
#include "llenhance/temporal.hpp"
#include "llenhance/weights.hpp"

namespace llenhance {

/// Failure of a whole command; the message names the frame or file involved.
class CommandError : public Error {
 public:
  using Error::Error;
};

struct PipelineConfig {
  std::string input;    // printf-style pattern
  std::string output;   // printf-style pattern
  std::string weights;
  FrameRange frames{0, -1};
  int local_size = 360;
  int region_size = 1000;
  int max_half_window = 6;
  double motion_cutoff = 256.0;
  int jobs = default_jobs();
  int bit_depth = 16;

  PatchConfig patch() const { return {local_size, region_size}; }
  SmoothingConfig smoothing() const { return {max_half_window, motion_cutoff}; }

  void validate() const {
    if (local_size % 8 != 0 || local_size < 8) throw CommandError("local size must be a positive multiple of 8");
    if (region_size <= local_size) throw CommandError("region size must exceed local size");
    if (max_half_window < 0) throw CommandError("nmax must be >= 0");
    if (!(motion_cutoff > 0.0)) throw CommandError("motion cutoff must be > 0");
    if (bit_depth != 8 && bit_depth != 16) throw CommandError("bit depth must be 8 or 16");
    if (jobs < 1) throw CommandError("jobs must be >= 1");
    if (frames.count() == 0) throw CommandError("empty frame range");
    if (input.empty() || output.empty()) throw CommandError("input and output patterns are required");
  }
};

/// Overlays keys present in a JSON config object onto `cfg`.
inline void apply_json_config(PipelineConfig& cfg, const nlohmann::json& j) {
  try {
    if (j.contains("input")) cfg.input = j.at("input").get<std::string>();
    if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
    if (j.contains("weights")) cfg.weights = j.at("weights").get<std::string>();
    if (j.contains("frames")) cfg.frames = parse_frame_range(j.at("frames").get<std::string>());
    if (j.contains("local_size")) cfg.local_size = j.at("local_size").get<int>();
    if (j.contains("region_size")) cfg.region_size = j.at("region_size").get<int>();
    if (j.contains("nmax")) cfg.max_half_window = j.at("nmax").get<int>();
    if (j.contains("motion_cutoff")) cfg.motion_cutoff = j.at("motion_cutoff").get<double>();
    if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<int>();
    if (j.contains("bit_depth")) cfg.bit_depth = j.at("bit_depth").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw CommandError(std::string("bad config: ") + e.what());
  }
}

inline PipelineConfig load_config_file(const std::filesystem::path& path, PipelineConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw CommandError("cannot open config file " + path.string());
  try {
    apply_json_config(base, nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw CommandError("cannot parse config file " + path.string() + ": " + e.what());
  }
  return base;
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline void emit(std::ostream& progress, const nlohmann::json& line) {
  progress << line.dump() << '\n' << std::flush;
}

inline Generator open_generator(const PipelineConfig& cfg) {
  try {
    GeneratorWeights w = load_weights(cfg.weights);
    if (cfg.local_size % w.arch().size_multiple() != 0) {
      throw CommandError("local size " + std::to_string(cfg.local_size) + " is not divisible by " +
                         std::to_string(w.arch().size_multiple()) + " for weights " + cfg.weights);
    }
    return Generator(w);
  } catch (const CommandError&) {
    throw;
  } catch (const Error& e) {
    throw CommandError("weights " + cfg.weights + ": " + e.what());
  }
}

template <class Fn>
auto frame_step(int index, const std::filesystem::path& path, Fn&& fn) {
  try {
    return fn();
  } catch (const CommandError&) {
    throw;
  } catch (const Error& e) {
    throw CommandError("frame " + std::to_string(index) + " (" + path.string() + "): " + e.what());
  }
}

// Frames as the smoothing stage sees them after a save/load round trip.
inline Frame as_written(const Frame& f, const std::filesystem::path& path, int bit_depth) {
  return is_raw_frame_path(path) ? f : quantize(f, bit_depth);
}

/// Sliding window over a frame sequence. Frames are pushed in order; once
/// the window reaches far enough past `center`, that frame can be smoothed.
class SmoothingWindow {
 public:
  explicit SmoothingWindow(const PipelineConfig& cfg) : cfg_(cfg) {}

  void push(int index, Frame frame, const std::filesystem::path& source) {
    if (frames_.empty()) first_ = index;
    if (!dims_) dims_ = std::pair{frame.width(), frame.height()};
    if (frame.width() != dims_->first || frame.height() != dims_->second) {
      throw CommandError("frame " + std::to_string(index) + " (" + source.string() + ") is " +
                         std::to_string(frame.width()) + "x" + std::to_string(frame.height()) + ", expected " +
                         std::to_string(dims_->first) + "x" + std::to_string(dims_->second));
    }
    frames_.push_back(std::move(frame));
  }

  int last_index() const { return first_ + static_cast<int>(frames_.size()) - 1; }

  /// Smooths frame `t` and drops frames no longer needed afterwards.
  Frame smooth(int t, std::ostream& progress) {
    const auto t0 = Clock::now();
    const int n = cfg_.max_half_window;
    while (!frames_.empty() && first_ < t - n) {
      frames_.erase(frames_.begin());
      ++first_;
    }
    const auto center = static_cast<std::size_t>(t - first_);
    const std::size_t end = std::min(frames_.size(), center + n + 1);
    std::span<const Frame> window(frames_.data(), end);
    Frame out = smooth_sequence(window, center, cfg_.smoothing(), cfg_.jobs);
    emit(progress, {{"command", "smooth"},
                    {"frame", t},
                    {"neighbors", static_cast<int>(window.size()) - 1},
                    {"seconds", seconds_since(t0)}});
    return out;
  }

 private:
  PipelineConfig cfg_;
  std::vector<Frame> frames_;
  int first_ = 0;
  std::optional<std::pair<int, int>> dims_;
};

}  // namespace detail

/// Enhances every frame of the range tile by tile.
inline void cmd_enhance(const PipelineConfig& cfg, std::ostream& progress) {
  cfg.validate();
  const Generator gen = detail::open_generator(cfg);
  const SequencePattern in(cfg.input), out(cfg.output);
  for (int t = cfg.frames.first; t <= cfg.frames.last; ++t) {
    const auto t0 = detail::Clock::now();
    const Frame frame = detail::frame_step(t, in.path(t), [&] { return load_frame(in.path(t)); });
    EnhanceStats stats;
    const Frame enhanced =
        detail::frame_step(t, in.path(t), [&] { return enhance_frame(frame, gen, cfg.patch(), cfg.jobs, &stats); });
    detail::frame_step(t, out.path(t), [&] { save_frame(enhanced, out.path(t), cfg.bit_depth); });
    detail::emit(progress, {{"command", "enhance"},
                            {"frame", t},
                            {"width", frame.width()},
                            {"height", frame.height()},
                            {"tiles", stats.tiles},
                            {"seconds", detail::seconds_since(t0)}});
  }
}

/// Motion-adaptive temporal averaging over [t - nmax, t + nmax], truncated at
/// the ends of the range.
inline void cmd_smooth(const PipelineConfig& cfg, std::ostream& progress) {
  cfg.validate();
  const SequencePattern in(cfg.input), out(cfg.output);
  detail::SmoothingWindow window(cfg);
  int loaded = cfg.frames.first - 1;
  for (int t = cfg.frames.first; t <= cfg.frames.last; ++t) {
    while (loaded < std::min(cfg.frames.last, t + cfg.max_half_window)) {
      ++loaded;
      window.push(loaded, detail::frame_step(loaded, in.path(loaded), [&] { return load_frame(in.path(loaded)); }),
                  in.path(loaded));
    }
    const Frame smoothed = detail::frame_step(t, in.path(t), [&] { return window.smooth(t, progress); });
    detail::frame_step(t, out.path(t), [&] { save_frame(smoothed, out.path(t), cfg.bit_depth); });
  }
}

/// Enhancement followed by smoothing, streamed. Enhanced frames are quantised
/// to what the output format would store, so the result equals running
/// enhance and smooth separately with the same output format.
inline void cmd_pipeline(const PipelineConfig& cfg, std::ostream& progress) {
  cfg.validate();
  const Generator gen = detail::open_generator(cfg);
  const SequencePattern in(cfg.input), out(cfg.output);
  detail::SmoothingWindow window(cfg);
  int enhanced = cfg.frames.first - 1;
  for (int t = cfg.frames.first; t <= cfg.frames.last; ++t) {
    while (enhanced < std::min(cfg.frames.last, t + cfg.max_half_window)) {
      const int k = ++enhanced;
      const auto t0 = detail::Clock::now();
      const Frame frame = detail::frame_step(k, in.path(k), [&] { return load_frame(in.path(k)); });
      EnhanceStats stats;
      Frame e = detail::frame_step(k, in.path(k), [&] {
        return detail::as_written(enhance_frame(frame, gen, cfg.patch(), cfg.jobs, &stats), out.path(k),
                                  cfg.bit_depth);
      });
      detail::emit(progress, {{"command", "enhance"},
                              {"frame", k},
                              {"width", frame.width()},
                              {"height", frame.height()},
                              {"tiles", stats.tiles},
                              {"seconds", detail::seconds_since(t0)}});
      window.push(k, std::move(e), in.path(k));
    }
    const Frame smoothed = detail::frame_step(t, in.path(t), [&] { return window.smooth(t, progress); });
    detail::frame_step(t, out.path(t), [&] { save_frame(smoothed, out.path(t), cfg.bit_depth); });
  }
}

/// Architecture and tensor manifest of a weight file, as JSON.
inline nlohmann::json describe_weights(const std::filesystem::path& path) {
  GeneratorWeights w = [&] {
    try {
      return load_weights(path);
    } catch (const Error& e) {
      throw CommandError(path.string() + ": " + e.what());
    }
  }();
  nlohmann::json summary;
  summary["path"] = path.string();
  summary["arch"] = arch_to_json(w.arch());
  summary["tensors"] = nlohmann::json::array();
  std::size_t params = 0;
  for (const auto& spec : expected_tensors(w.arch())) {
    summary["tensors"].push_back({{"name", spec.name}, {"shape", spec.shape}});
    params += spec.count();
  }
  summary["tensor_count"] = summary["tensors"].size();
  summary["parameters"] = params;
  return summary;
}

}  // namespace llenhance
