// Command-line front end: enhance, smooth, pipeline, validate-weights, init-weights.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "llenhance.hpp"

namespace {

struct SequenceFlags {
  std::optional<std::string> input, output, weights, frames, config;
  std::optional<int> local_size, region_size, nmax, jobs, bit_depth;
  std::optional<double> motion_cutoff;

  void attach(CLI::App& app, bool needs_weights) {
    app.add_option("--input", input, "Input frame pattern, e.g. in/frame_%06d.png");
    app.add_option("--output", output, "Output frame pattern");
    if (needs_weights) app.add_option("--weights", weights, "Generator weight file (LLGW)");
    app.add_option("--frames", frames, "Inclusive frame index range a..b");
    app.add_option("--local-size", local_size, "Local patch side in pixels (default 360)");
    app.add_option("--region-size", region_size, "Region patch side in pixels (default 1000)");
    app.add_option("--nmax", nmax, "Maximum temporal half window (default 6)");
    app.add_option("--motion-cutoff", motion_cutoff, "Motion in pixels beyond which no neighbours are used (default 256)");
    app.add_option("--jobs", jobs, "Worker threads (default: all cores)");
    app.add_option("--bit-depth", bit_depth, "Output PNG bit depth, 8 or 16 (default 16)");
    app.add_option("--config", config, "JSON config file; flags override its values");
  }

  llenhance::PipelineConfig resolve() const {
    llenhance::PipelineConfig cfg;
    if (config) cfg = llenhance::load_config_file(*config, cfg);
    if (input) cfg.input = *input;
    if (output) cfg.output = *output;
    if (weights) cfg.weights = *weights;
    if (frames) cfg.frames = llenhance::parse_frame_range(*frames);
    if (local_size) cfg.local_size = *local_size;
    if (region_size) cfg.region_size = *region_size;
    if (nmax) cfg.max_half_window = *nmax;
    if (motion_cutoff) cfg.motion_cutoff = *motion_cutoff;
    if (jobs) cfg.jobs = *jobs;
    if (bit_depth) cfg.bit_depth = *bit_depth;
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-light sequence enhancement: tiled generator inference and temporal smoothing"};
  app.require_subcommand(1);

  SequenceFlags enhance_flags, smooth_flags, pipeline_flags;
  auto* enhance = app.add_subcommand("enhance", "Enhance each frame tile by tile");
  enhance_flags.attach(*enhance, true);
  auto* smooth = app.add_subcommand("smooth", "Motion-adaptive temporal smoothing");
  smooth_flags.attach(*smooth, false);
  auto* pipeline = app.add_subcommand("pipeline", "Enhance, then smooth the enhanced sequence");
  pipeline_flags.attach(*pipeline, true);

  std::string validate_path;
  auto* validate = app.add_subcommand("validate-weights", "Check a weight file and print its manifest");
  validate->add_option("path", validate_path, "Weight file")->required();

  std::string init_path;
  int init_filters = 64;
  int init_resnet = 9;
  std::uint64_t init_seed = 0;
  bool init_passthrough = false;
  auto* init = app.add_subcommand("init-weights", "Write a randomly initialised or pass-through weight file");
  init->add_option("path", init_path, "Output weight file")->required();
  init->add_option("--base-filters", init_filters, "Encoder base width");
  init->add_option("--resnet-blocks", init_resnet, "Residual block count");
  init->add_option("--seed", init_seed, "Random seed");
  init->add_flag("--passthrough", init_passthrough, "Near-identity weights instead of random ones");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*enhance) {
      llenhance::cmd_enhance(enhance_flags.resolve(), std::cout);
    } else if (*smooth) {
      llenhance::cmd_smooth(smooth_flags.resolve(), std::cout);
    } else if (*pipeline) {
      llenhance::cmd_pipeline(pipeline_flags.resolve(), std::cout);
    } else if (*validate) {
      std::cout << llenhance::describe_weights(validate_path).dump(2) << '\n';
    } else if (*init) {
      llenhance::GeneratorArch arch;
      arch.base_filters = init_filters;
      arch.n_resnet_blocks = init_resnet;
      const auto w = init_passthrough ? llenhance::passthrough_weights(arch) : llenhance::random_weights(arch, init_seed);
      llenhance::save_weights(w, init_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return EXIT_FAILURE;
  }
  return EXIT_SUCCESS;
}
