#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rde/solvers.hpp"

namespace rde {

/// Parsed experiment configuration. `echo` holds the canonical JSON dump
/// (sorted keys) echoed into result.json, so reruns of one config are
/// byte-identical.
struct PipelineConfig {
  std::string pipeline;
  std::string input;
  std::string model;
  std::string model_inpainter;
  std::string out_dir = ".";

  // representation {type, params}
  std::string representation = "identity";
  int wavelet_order = 3;
  int wavelet_levels = 5;
  std::size_t patch_side = 2;
  std::size_t channels_per_block = 0;  // 0 -> image channel count

  // obfuscation {type, params}
  std::string obfuscation = "gaussian";
  double constant_value = 0.0;
  double inpaint_noise = 0.05;
  std::size_t blur_side = 3;
  double gaussian_mean = 0.0;
  double gaussian_std = 1.0;

  // distortion {type, j_star | "auto", C, J}
  std::string distortion = "d1";
  int j_star = -1;  // -1 = auto (argmax of the reference output)
  double scale_c = 100.0;
  std::vector<std::size_t> subset;

  SolverConfig solver;
  double lambda_wavelet = 3.0;     // wavelet-method lambda for rd_scatter
  std::vector<double> sweep;       // rd_curve sweep values

  // radio
  std::uint64_t world_seed = 7;
  std::size_t grid = 32;
  std::size_t n_measurements = 40;
  std::string completion = "inpaint";  // zero | inpaint | mixed
  double completion_fraction = 0.025;

  // train / dataset generation
  std::size_t train_count = 600;
  std::size_t heldout_count = 128;
  int epochs = 40;
  double train_lr = 1e-3;
  std::uint64_t train_seed = 5;
  double gamma = 5.0;
  std::size_t audio_length = 128;
  int n_classes = 4;

  // audio query
  std::string audio_mode = "per_frequency";  // per_frequency | mag_phase
  std::size_t audio_index = 0;
  std::size_t max_class_samples = 12;
  std::vector<std::string> class_names;

  std::string echo;
};

/// Parses the JSON config text; unknown pipelines fail late in run_pipeline.
PipelineConfig parse_pipeline_config(const std::string& json_text);
PipelineConfig load_pipeline_config(const std::string& path);

/// CLI overrides: --out replaces the output directory; --seed replaces the
/// solver, world, and training seeds (the evaluation seed is re-derived).
/// Rebuilds the canonical echo.
void apply_overrides(PipelineConfig& config, const std::optional<std::string>& out_dir,
                     const std::optional<std::uint64_t>& seed);

struct PipelineOutcome {
  std::optional<ExplanationResult> result;
  std::vector<std::string> files;  // artifacts written under out_dir
  std::string summary;             // one-line human description
};

PipelineOutcome run_pixel_rde(const PipelineConfig& config);
PipelineOutcome run_cartoonx(const PipelineConfig& config);
PipelineOutcome run_audio_query(const PipelineConfig& config);
PipelineOutcome run_radio_pursuit(const PipelineConfig& config);
PipelineOutcome run_interpretation_training(const PipelineConfig& config);
PipelineOutcome run_rd_scatter(const PipelineConfig& config);
PipelineOutcome run_rd_curve(const PipelineConfig& config);
PipelineOutcome run_oracle(const PipelineConfig& config);
PipelineOutcome run_train(const PipelineConfig& config);

/// Dispatch on config.pipeline.
PipelineOutcome run_pipeline(const PipelineConfig& config);

/// Audio corpus CSV: one row per signal, label first, then the samples.
void write_audio_corpus_csv(const std::string& path,
                            const std::vector<std::pair<int, std::vector<double>>>& rows);
std::vector<std::pair<int, std::vector<double>>> read_audio_corpus_csv(const std::string& path);

}  // namespace rde
