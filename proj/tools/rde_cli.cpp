#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rde/pipelines.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::int64_t seed = -1;
  bool has_seed = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out_dir, "Output directory (overrides config)");
  cmd->add_option("--seed", args.seed, "Seed override for solver/world/training");
}

int run_command(const CommonArgs& args, const std::vector<std::string>& allowed_pipelines,
                bool prefix_match) {
  rde::PipelineConfig config = rde::load_pipeline_config(args.config_path);
  bool ok = false;
  for (const std::string& p : allowed_pipelines) {
    if (prefix_match ? config.pipeline.rfind(p, 0) == 0 : config.pipeline == p) ok = true;
  }
  if (!ok) {
    std::cerr << "error: pipeline '" << config.pipeline << "' is not valid for this subcommand\n";
    return 2;
  }
  std::optional<std::string> out;
  if (!args.out_dir.empty()) out = args.out_dir;
  std::optional<std::uint64_t> seed;
  if (args.seed >= 0) seed = static_cast<std::uint64_t>(args.seed);
  rde::apply_overrides(config, out, seed);

  const rde::PipelineOutcome outcome = rde::run_pipeline(config);
  std::cout << outcome.summary << "\n";
  for (const std::string& f : outcome.files) std::cout << "  wrote " << f << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rate-distortion explanation toolkit"};
  app.require_subcommand(1);

  CommonArgs train_args, explain_args, curve_args, oracle_args, radio_args, compare_args;

  CLI::App* train = app.add_subcommand("train", "Train a desk-scale model and emit sample data");
  add_common(train, train_args);
  CLI::App* explain = app.add_subcommand("explain", "Run a mask explanation pipeline");
  add_common(explain, explain_args);
  CLI::App* curve = app.add_subcommand("curve", "Rate-distortion curves and scatter data");
  add_common(curve, curve_args);
  CLI::App* oracle = app.add_subcommand("oracle", "Exhaustive mask search (small k)");
  add_common(oracle, oracle_args);
  CLI::App* radio = app.add_subcommand("radio", "Radio-map matching pursuit");
  add_common(radio, radio_args);
  CLI::App* compare = app.add_subcommand("compare-training",
                                         "Vanilla vs interpretation-driven training");
  add_common(compare, compare_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return run_command(train_args, {"train"}, true);
    if (explain->parsed()) {
      return run_command(explain_args, {"pixel_rde", "cartoonx", "audio_query"}, false);
    }
    if (curve->parsed()) return run_command(curve_args, {"rd_scatter", "rd_curve"}, false);
    if (oracle->parsed()) return run_command(oracle_args, {"oracle"}, false);
    if (radio->parsed()) return run_command(radio_args, {"radio_pursuit"}, false);
    if (compare->parsed()) return run_command(compare_args, {"interpretation_training"}, false);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
