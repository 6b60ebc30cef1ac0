#include "rde/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rde/datasets.hpp"
#include "rde/distortions.hpp"
#include "rde/fourier.hpp"
#include "rde/io.hpp"
#include "rde/obfuscations.hpp"
#include "rde/radio.hpp"
#include "rde/representations.hpp"
#include "rde/wavelet.hpp"

namespace rde {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json config_to_json(const PipelineConfig& c) {
  json j;
  j["pipeline"] = c.pipeline;
  j["input"] = c.input;
  j["model"] = c.model;
  j["model_inpainter"] = c.model_inpainter;
  j["out"] = c.out_dir;
  j["representation"] = {{"type", c.representation},
                         {"params",
                          {{"order", c.wavelet_order},
                           {"levels", c.wavelet_levels},
                           {"patch_side", c.patch_side},
                           {"channels_per_block", c.channels_per_block}}}};
  j["obfuscation"] = {{"type", c.obfuscation},
                      {"params",
                       {{"constant", c.constant_value},
                        {"noise_scale", c.inpaint_noise},
                        {"blur_side", c.blur_side},
                        {"mean", c.gaussian_mean},
                        {"std", c.gaussian_std}}}};
  json dist = {{"type", c.distortion}, {"C", c.scale_c}, {"J", c.subset}};
  if (c.j_star < 0) {
    dist["j_star"] = "auto";
  } else {
    dist["j_star"] = c.j_star;
  }
  j["distortion"] = dist;
  const char* solver_type = "l1";
  switch (c.solver.type) {
    case SolverConfig::Type::l1: solver_type = "l1"; break;
    case SolverConfig::Type::bernoulli: solver_type = "bernoulli"; break;
    case SolverConfig::Type::pursuit: solver_type = "pursuit"; break;
    case SolverConfig::Type::exhaustive: solver_type = "exhaustive"; break;
  }
  j["solver"] = {{"type", solver_type},
                 {"lambda", c.solver.lambda},
                 {"steps", c.solver.steps},
                 {"lr", c.solver.lr},
                 {"samples", c.solver.n_samples},
                 {"temperature", c.solver.temperature},
                 {"budget", c.solver.budget},
                 {"tolerance", c.solver.tolerance},
                 {"seed", c.solver.seed},
                 {"eval_seed", c.solver.eval_seed},
                 {"eval_samples", c.solver.eval_samples}};
  j["lambda_wavelet"] = c.lambda_wavelet;
  j["sweep"] = c.sweep;
  j["radio"] = {{"world_seed", c.world_seed},
                {"grid", c.grid},
                {"n_measurements", c.n_measurements},
                {"completion", c.completion},
                {"fraction", c.completion_fraction}};
  j["train"] = {{"count", c.train_count},
                {"heldout", c.heldout_count},
                {"epochs", c.epochs},
                {"lr", c.train_lr},
                {"seed", c.train_seed},
                {"gamma", c.gamma},
                {"audio_length", c.audio_length},
                {"classes", c.n_classes}};
  j["audio"] = {{"mode", c.audio_mode},
                {"index", c.audio_index},
                {"max_class_samples", c.max_class_samples},
                {"class_names", c.class_names}};
  return j;
}

SolverConfig::Type solver_type_from(const std::string& name) {
  if (name == "l1") return SolverConfig::Type::l1;
  if (name == "bernoulli") return SolverConfig::Type::bernoulli;
  if (name == "pursuit") return SolverConfig::Type::pursuit;
  if (name == "exhaustive") return SolverConfig::Type::exhaustive;
  fail("config: unknown solver type '" + name + "'");
}

// Paper-stated hyperparameters become the per-pipeline defaults; the JSON
// config overrides any of them.
void apply_pipeline_defaults(PipelineConfig& c) {
  if (c.pipeline == "pixel_rde") {
    c.representation = "identity";
    c.obfuscation = "gaussian";
    c.distortion = "d1";
    c.scale_c = 100.0;
    c.solver.type = SolverConfig::Type::l1;
    c.solver.lambda = 0.6;
    c.solver.steps = 2000;
    c.solver.lr = 0.003;
    c.solver.n_samples = 64;
  } else if (c.pipeline == "cartoonx") {
    c.representation = "dwt";
    c.wavelet_order = 3;
    c.wavelet_levels = 5;
    c.obfuscation = "gaussian_per_scale";
    c.distortion = "d1";
    c.scale_c = 100.0;
    c.solver.type = SolverConfig::Type::l1;
    c.solver.lambda = 3.0;
    c.solver.steps = 2000;
    c.solver.lr = 0.003;
    c.solver.n_samples = 64;
  } else if (c.pipeline == "audio_query") {
    c.distortion = "d1";
    c.scale_c = 1.0;
    c.solver.type = SolverConfig::Type::bernoulli;
    c.solver.temperature = 0.1;
    if (c.audio_mode == "mag_phase") {
      c.representation = "fourier_split";
      c.obfuscation = "spectrum_noise";
      c.solver.lambda = 30.0;
      c.solver.lr = 1e-4;
      c.solver.steps = 200000;
    } else {
      c.representation = "fourier";
      c.obfuscation = "inpaint";
      c.solver.lambda = 50.0;
      c.solver.lr = 1e-5;
      c.solver.steps = 1000000;
    }
  } else if (c.pipeline == "radio_pursuit") {
    c.representation = "grouped";
    c.distortion = "d4";
    c.solver.type = SolverConfig::Type::pursuit;
    c.solver.budget = 5;
    c.solver.n_samples = 1;
  } else if (c.pipeline == "rd_scatter") {
    c.representation = "identity";
    c.obfuscation = "gaussian";
    c.distortion = "d1";
    c.scale_c = 100.0;
    c.solver.type = SolverConfig::Type::l1;
    c.solver.lambda = 0.6;
    c.lambda_wavelet = 3.0;
  }
}

PipelineConfig parse_config_json(const json& j) {
  PipelineConfig c;
  c.pipeline = j.value("pipeline", std::string());
  if (j.contains("audio")) {
    const json& a = j.at("audio");
    c.audio_mode = a.value("mode", c.audio_mode);
  }
  apply_pipeline_defaults(c);

  c.input = j.value("input", c.input);
  c.model = j.value("model", c.model);
  c.model_inpainter = j.value("model_inpainter", c.model_inpainter);
  c.out_dir = j.value("out", c.out_dir);

  if (j.contains("representation")) {
    const json& r = j.at("representation");
    c.representation = r.value("type", c.representation);
    if (r.contains("params")) {
      const json& p = r.at("params");
      c.wavelet_order = p.value("order", c.wavelet_order);
      c.wavelet_levels = p.value("levels", c.wavelet_levels);
      c.patch_side = p.value("patch_side", c.patch_side);
      c.channels_per_block = p.value("channels_per_block", c.channels_per_block);
    }
  }
  if (j.contains("obfuscation")) {
    const json& o = j.at("obfuscation");
    c.obfuscation = o.value("type", c.obfuscation);
    if (o.contains("params")) {
      const json& p = o.at("params");
      c.constant_value = p.value("constant", c.constant_value);
      c.inpaint_noise = p.value("noise_scale", c.inpaint_noise);
      c.blur_side = p.value("blur_side", c.blur_side);
      c.gaussian_mean = p.value("mean", c.gaussian_mean);
      c.gaussian_std = p.value("std", c.gaussian_std);
    }
  }
  if (j.contains("distortion")) {
    const json& d = j.at("distortion");
    c.distortion = d.value("type", c.distortion);
    if (d.contains("j_star") && d.at("j_star").is_number_integer()) {
      c.j_star = d.at("j_star").get<int>();
    }
    c.scale_c = d.value("C", c.scale_c);
    if (d.contains("J")) c.subset = d.at("J").get<std::vector<std::size_t>>();
  }
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    if (s.contains("type")) c.solver.type = solver_type_from(s.at("type").get<std::string>());
    c.solver.lambda = s.value("lambda", c.solver.lambda);
    c.solver.steps = s.value("steps", c.solver.steps);
    c.solver.lr = s.value("lr", c.solver.lr);
    c.solver.n_samples = s.value("samples", c.solver.n_samples);
    c.solver.temperature = s.value("temperature", c.solver.temperature);
    c.solver.budget = s.value("budget", c.solver.budget);
    c.solver.tolerance = s.value("tolerance", c.solver.tolerance);
    c.solver.seed = s.value("seed", c.solver.seed);
    c.solver.eval_seed = s.value("eval_seed", c.solver.seed + 1000003ULL);
    c.solver.eval_samples = s.value("eval_samples", c.solver.eval_samples);
  } else {
    c.solver.eval_seed = c.solver.seed + 1000003ULL;
  }
  c.lambda_wavelet = j.value("lambda_wavelet", c.lambda_wavelet);
  if (j.contains("sweep")) c.sweep = j.at("sweep").get<std::vector<double>>();
  if (j.contains("radio")) {
    const json& r = j.at("radio");
    c.world_seed = r.value("world_seed", c.world_seed);
    c.grid = r.value("grid", c.grid);
    c.n_measurements = r.value("n_measurements", c.n_measurements);
    c.completion = r.value("completion", c.completion);
    c.completion_fraction = r.value("fraction", c.completion_fraction);
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    c.train_count = t.value("count", c.train_count);
    c.heldout_count = t.value("heldout", c.heldout_count);
    c.epochs = t.value("epochs", c.epochs);
    c.train_lr = t.value("lr", c.train_lr);
    c.train_seed = t.value("seed", c.train_seed);
    c.gamma = t.value("gamma", c.gamma);
    c.audio_length = t.value("audio_length", c.audio_length);
    c.n_classes = t.value("classes", c.n_classes);
  }
  if (j.contains("audio")) {
    const json& a = j.at("audio");
    c.audio_mode = a.value("mode", c.audio_mode);
    c.audio_index = a.value("index", c.audio_index);
    c.max_class_samples = a.value("max_class_samples", c.max_class_samples);
    if (a.contains("class_names")) {
      c.class_names = a.at("class_names").get<std::vector<std::string>>();
    }
  }
  c.echo = config_to_json(c).dump(2);
  return c;
}

std::string out_path(const PipelineConfig& c, const std::string& name) {
  fs::create_directories(c.out_dir);
  return (fs::path(c.out_dir) / name).string();
}

json result_core_json(const ExplanationResult& r, const std::string& mask_path) {
  json j;
  j["mask_path"] = mask_path;
  j["distortion"] = {{"mean", r.distortion.mean},
                     {"std_error", r.distortion.std_error},
                     {"n_samples", r.distortion.n_samples}};
  j["l1_normalized"] = r.l1_normalized;
  j["objective_trace"] = r.objective_trace;
  if (!r.selection_order.empty()) j["selection_order"] = r.selection_order;
  return j;
}

void write_result_json(const PipelineConfig& c, PipelineOutcome& outcome, json body) {
  body["config"] = json::parse(c.echo);
  const std::string path = out_path(c, "result.json");
  write_text_file(path, body.dump(2) + "\n");
  outcome.files.push_back(path);
}

std::shared_ptr<const ModelHandle> load_model_handle(const std::string& path) {
  if (path.empty()) fail("pipeline: a model path is required");
  return std::make_shared<NeuralModel>(load_model_json(path));
}

std::shared_ptr<const DistortionMeasure> build_distortion(const PipelineConfig& c,
                                                          std::span<const double> reference) {
  if (c.distortion == "d1") {
    const std::size_t label =
        c.j_star >= 0 ? static_cast<std::size_t>(c.j_star) : argmax_label(reference);
    return std::make_shared<SquaredScoreDistortion>(label, c.scale_c);
  }
  if (c.distortion == "d2") {
    const std::size_t label =
        c.j_star >= 0 ? static_cast<std::size_t>(c.j_star) : argmax_label(reference);
    return std::make_shared<SquaredProbabilityDistortion>(label);
  }
  if (c.distortion == "d3") {
    return std::make_shared<SubsetL2Distortion>(SubsetL2Distortion::full(reference.size()));
  }
  if (c.distortion == "d4") {
    if (c.subset.empty()) fail("pipeline: d4 requires a non-empty subset J");
    return std::make_shared<SubsetL2Distortion>(c.subset);
  }
  fail("pipeline: unknown distortion '" + c.distortion + "'");
}

std::shared_ptr<const RepresentationSystem> build_representation(const PipelineConfig& c,
                                                                 const Shape& shape) {
  if (c.representation == "identity") {
    const std::size_t cpb =
        c.channels_per_block > 0
            ? c.channels_per_block
            : (!shape.is_composite() && shape.dims.size() >= 3 ? shape.channels() : 1);
    return make_identity(shape, cpb);
  }
  if (c.representation == "patch") return make_patch(shape, c.patch_side);
  if (c.representation == "dwt") {
    WaveletSpec spec;
    spec.order = c.wavelet_order;
    spec.levels = std::min(c.wavelet_levels, dwt_max_levels(shape.height(), shape.width()));
    return make_dwt2d(shape, spec);
  }
  if (c.representation == "fourier") return make_fourier_per_frequency(shape.value_count());
  if (c.representation == "fourier_split") return make_fourier_split(shape.value_count());
  fail("pipeline: unknown representation '" + c.representation + "'");
}

/// White-noise-spectrum perturbation for Fourier representations: Gaussian
/// time-domain noise with the target's l2 norm, analyzed through the
/// representation.
class SpectrumNoisePerturbation final : public PerturbationDistribution {
public:
  explicit SpectrumNoisePerturbation(std::shared_ptr<const RepresentationSystem> rep)
      : rep_(std::move(rep)) {}

  CoefficientVector sample(const CoefficientVector& h, const Mask& s,
                           RngStream& rng) const override {
    (void)s;
    const Shape shape = rep_->signal_shape();
    const std::size_t n = shape.value_count();
    // Target power via Parseval over the magnitude coefficients.
    double power = 0.0;
    if (h.block_count() == 2) {
      for (double m : h.block(0)) power += m * m;
    } else {
      for (std::size_t b = 0; b < h.block_count(); ++b) power += h.block(b)[0] * h.block(b)[0];
    }
    const double target_norm = std::sqrt(power / static_cast<double>(n));
    std::vector<double> noise(n);
    double norm = 0.0;
    for (double& v : noise) {
      v = rng.gaussian();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    const double scale = norm > 0.0 ? target_norm / norm : 0.0;
    for (double& v : noise) v *= scale;
    return rep_->analyze(Signal(std::move(noise), shape));
  }

private:
  std::shared_ptr<const RepresentationSystem> rep_;
};

std::shared_ptr<const PerturbationDistribution> build_obfuscation(
    const PipelineConfig& c, std::shared_ptr<const RepresentationSystem> rep, const Signal& x) {
  if (c.obfuscation == "constant") {
    return std::make_shared<ConstantPerturbation>(c.constant_value);
  }
  if (c.obfuscation == "gaussian") {
    return std::make_shared<GaussianAdaptive>(GaussianSpec::Mode::global);
  }
  if (c.obfuscation == "gaussian_fixed") {
    return std::make_shared<GaussianPerturbation>(c.gaussian_mean, c.gaussian_std);
  }
  if (c.obfuscation == "gaussian_per_scale") {
    return std::make_shared<GaussianAdaptive>(GaussianSpec::Mode::per_scale,
                                              GaussianAdaptive::scales_from(*rep));
  }
  if (c.obfuscation == "blur") {
    const std::size_t side = c.blur_side;
    std::vector<double> kernel(side * side, 1.0 / static_cast<double>(side * side));
    return std::make_shared<BlurPerturbation>(x, kernel, side, *rep);
  }
  if (c.obfuscation == "inpaint") {
    return std::make_shared<BaselineInpainter>(c.inpaint_noise);
  }
  if (c.obfuscation == "spectrum_noise") {
    return std::make_shared<SpectrumNoisePerturbation>(std::move(rep));
  }
  fail("pipeline: unknown obfuscation '" + c.obfuscation + "'");
}

RdeProblem build_image_problem(const PipelineConfig& c, Signal image,
                               std::shared_ptr<const ModelHandle> model) {
  RdeProblem problem;
  problem.representation = build_representation(c, image.shape());
  problem.model = std::move(model);
  const std::vector<double> reference = problem.model->forward(image);
  problem.distortion = build_distortion(c, reference);
  problem.perturbation = build_obfuscation(c, problem.representation, image);
  problem.clip = ClipRange{0.0, 1.0};
  problem.add_target(std::move(image));
  return problem;
}

ExplanationResult run_solver(const RdeProblem& problem, const SolverConfig& cfg) {
  switch (cfg.type) {
    case SolverConfig::Type::l1: return solve_l1(problem, cfg);
    case SolverConfig::Type::bernoulli: return solve_bernoulli(problem, cfg);
    case SolverConfig::Type::pursuit: return matching_pursuit(problem, cfg);
    case SolverConfig::Type::exhaustive: {
      const OracleResult oracle = exhaustive_oracle(problem, cfg.budget, cfg.eval_seed,
                                                    cfg.effective_eval_samples());
      ExplanationResult r;
      r.mask = oracle.mask;
      r.hard_mask = oracle.mask;
      r.distortion = evaluate_mask(problem, oracle.mask, cfg.eval_seed,
                                   cfg.effective_eval_samples());
      r.l1_normalized = oracle.mask.sparsity_l1() / static_cast<double>(oracle.mask.size());
      r.config = cfg;
      return r;
    }
  }
  fail("run_solver: unknown solver type");
}

std::string subband_name(Subband s) {
  switch (s) {
    case Subband::approx: return "approx";
    case Subband::horizontal: return "horizontal";
    case Subband::vertical: return "vertical";
    case Subband::diagonal: return "diagonal";
    case Subband::none: break;
  }
  return "none";
}

// An empty corpus is legal for rd_scatter (header-only CSV).
std::vector<LabeledImage> load_image_corpus(const std::string& dir) {
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".pgm") paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<LabeledImage> corpus;
  corpus.reserve(paths.size());
  for (const std::string& p : paths) corpus.push_back({read_pgm(p), 0});
  return corpus;
}

double classifier_accuracy(const ModelHandle& model, const std::vector<LabeledImage>& data) {
  std::size_t hits = 0;
  for (const LabeledImage& ex : data) {
    if (argmax_label(model.forward(ex.image)) == static_cast<std::size_t>(ex.label)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& json_text) {
  return parse_config_json(json::parse(json_text));
}

PipelineConfig load_pipeline_config(const std::string& path) {
  return parse_pipeline_config(read_text_file(path));
}

void apply_overrides(PipelineConfig& config, const std::optional<std::string>& out_dir,
                     const std::optional<std::uint64_t>& seed) {
  if (out_dir) config.out_dir = *out_dir;
  if (seed) {
    config.solver.seed = *seed;
    config.solver.eval_seed = *seed + 1000003ULL;
    config.world_seed = *seed;
    config.train_seed = *seed;
  }
  config.echo = config_to_json(config).dump(2);
}

PipelineOutcome run_pixel_rde(const PipelineConfig& config) {
  Signal image = read_pgm(config.input);
  const std::size_t height = image.shape().height();
  const std::size_t width = image.shape().width();
  auto model = load_model_handle(config.model);
  if (load_model_json(config.model).task != Task::classification) {
    fail("pixel_rde: requires a classification model");
  }
  const RdeProblem problem = build_image_problem(config, std::move(image), std::move(model));
  ExplanationResult result = solve_l1(problem, config.solver);

  PipelineOutcome outcome;
  const std::string mask_path = out_path(config, "mask.pgm");
  write_pgm(mask_path, result.mask.values(), height, width);
  outcome.files.push_back(mask_path);
  write_result_json(config, outcome, result_core_json(result, mask_path));
  std::ostringstream os;
  os << "pixel_rde: distortion " << format_double(result.distortion.mean) << ", |s|_1/k "
     << format_double(result.l1_normalized);
  outcome.summary = os.str();
  outcome.result = std::move(result);
  return outcome;
}

PipelineOutcome run_cartoonx(const PipelineConfig& config) {
  Signal image = read_pgm(config.input);
  auto model = load_model_handle(config.model);
  if (load_model_json(config.model).task != Task::classification) {
    fail("cartoonx: requires a classification model");
  }
  const RdeProblem problem = build_image_problem(config, image, std::move(model));
  ExplanationResult result = solve_l1(problem, config.solver);

  PipelineOutcome outcome;
  // Wavelet-domain mask as CSV with scale/subband labels.
  const std::string mask_path = out_path(config, "wavelet_mask.csv");
  {
    const auto& info = problem.representation->block_info();
    std::vector<std::vector<std::string>> rows;
    rows.reserve(result.mask.size());
    for (std::size_t b = 0; b < result.mask.size(); ++b) {
      rows.push_back({std::to_string(b), std::to_string(info[b].scale),
                      subband_name(info[b].subband), format_double(result.mask[b])});
    }
    write_csv(mask_path, {"block", "scale", "subband", "mask"}, rows);
    outcome.files.push_back(mask_path);
  }
  // Pixel-domain explanation: clip01(idwt(mask (.) dwt(greyscale image))).
  {
    const CoefficientVector h = problem.targets[0].h;
    const CoefficientVector masked =
        mix_coefficients(h, result.mask, CoefficientVector::zeros_like(h));
    Signal expl = problem.representation->synthesize(masked);
    std::vector<double> values = expl.values();
    for (double& v : values) v = std::clamp(v, 0.0, 1.0);
    const std::string expl_path = out_path(config, "explanation.pgm");
    write_pgm(expl_path, values, image.shape().height(), image.shape().width());
    outcome.files.push_back(expl_path);
  }
  write_result_json(config, outcome, result_core_json(result, mask_path));
  std::ostringstream os;
  os << "cartoonx: distortion " << format_double(result.distortion.mean) << ", |s|_1/k "
     << format_double(result.l1_normalized);
  outcome.summary = os.str();
  outcome.result = std::move(result);
  return outcome;
}

void write_audio_corpus_csv(const std::string& path,
                            const std::vector<std::pair<int, std::vector<double>>>& rows) {
  std::vector<std::vector<std::string>> csv_rows;
  csv_rows.reserve(rows.size());
  for (const auto& [label, values] : rows) {
    std::vector<std::string> row;
    row.reserve(values.size() + 1);
    row.push_back(std::to_string(label));
    for (double v : values) row.push_back(format_double(v));
    csv_rows.push_back(std::move(row));
  }
  std::vector<std::string> header = {"label"};
  if (!rows.empty()) {
    for (std::size_t i = 0; i < rows[0].second.size(); ++i) header.push_back("s" + std::to_string(i));
  }
  write_csv(path, header, csv_rows);
}

std::vector<std::pair<int, std::vector<double>>> read_audio_corpus_csv(const std::string& path) {
  std::vector<std::pair<int, std::vector<double>>> rows;
  for (const auto& row : read_csv(path, true)) {
    if (row.empty()) continue;
    std::pair<int, std::vector<double>> entry;
    entry.first = std::stoi(row[0]);
    entry.second.reserve(row.size() - 1);
    for (std::size_t i = 1; i < row.size(); ++i) entry.second.push_back(std::stod(row[i]));
    rows.push_back(std::move(entry));
  }
  return rows;
}

PipelineOutcome run_audio_query(const PipelineConfig& config) {
  if (config.audio_mode != "per_frequency" && config.audio_mode != "mag_phase") {
    fail("audio_query: unknown mode '" + config.audio_mode + "'");
  }
  const auto corpus = read_audio_corpus_csv(config.input);
  if (corpus.empty()) fail("audio_query: empty corpus");
  const std::size_t n = corpus[0].second.size();
  auto model = load_model_handle(config.model);

  PipelineOutcome outcome;
  if (config.audio_mode == "per_frequency") {
    if (config.audio_index >= corpus.size()) fail("audio_query: index out of range");
    Signal x(corpus[config.audio_index].second, Shape::vector(n));

    RdeProblem problem;
    problem.representation = build_representation(config, x.shape());
    problem.model = model;
    problem.distortion = build_distortion(config, model->forward(x));
    problem.perturbation = build_obfuscation(config, problem.representation, x);
    problem.add_target(std::move(x));

    ExplanationResult result = solve_bernoulli(problem, config.solver);
    const std::string table_path = out_path(config, "importance.csv");
    std::vector<std::vector<std::string>> rows;
    for (std::size_t b = 0; b < result.mask.size(); ++b) {
      rows.push_back({std::to_string(b), format_double(result.mask[b])});
    }
    write_csv(table_path, {"frequency", "theta"}, rows);
    outcome.files.push_back(table_path);
    write_result_json(config, outcome, result_core_json(result, table_path));
    outcome.summary = "audio_query per-frequency: |theta|_1/k " +
                      format_double(result.l1_normalized);
    outcome.result = std::move(result);
    return outcome;
  }

  // Class-level magnitude-vs-phase query: one solve per class, objective
  // averaged over the class samples.
  std::set<int> labels;
  for (const auto& [label, values] : corpus) labels.insert(label);
  std::vector<std::vector<std::string>> table_rows;
  json per_class = json::array();
  for (int label : labels) {
    RdeProblem problem;
    problem.representation = build_representation(config, Shape::vector(n));
    problem.model = model;
    std::vector<Signal> class_signals;
    for (const auto& [l, values] : corpus) {
      if (l == label && class_signals.size() < config.max_class_samples) {
        class_signals.emplace_back(values, Shape::vector(n));
      }
    }
    PipelineConfig class_cfg = config;
    class_cfg.j_star = label;  // the class under query
    problem.distortion = build_distortion(class_cfg, model->forward(class_signals[0]));
    problem.perturbation = build_obfuscation(config, problem.representation, class_signals[0]);
    for (Signal& s : class_signals) problem.add_target(std::move(s));

    const ExplanationResult result = solve_bernoulli(problem, config.solver);
    const std::string name = static_cast<std::size_t>(label) < config.class_names.size()
                                 ? config.class_names[static_cast<std::size_t>(label)]
                                 : "class" + std::to_string(label);
    table_rows.push_back({name, format_double(result.mask[0]), format_double(result.mask[1])});
    per_class.push_back({{"class", name},
                         {"magnitude_importance", result.mask[0]},
                         {"phase_importance", result.mask[1]},
                         {"distortion", result.distortion.mean}});
  }
  const std::string table_path = out_path(config, "mag_phase_importance.csv");
  write_csv(table_path, {"instrument", "magnitude_importance", "phase_importance"}, table_rows);
  outcome.files.push_back(table_path);
  json body;
  body["mask_path"] = table_path;
  body["per_class"] = std::move(per_class);
  write_result_json(config, outcome, std::move(body));
  outcome.summary = "audio_query mag/phase over " + std::to_string(table_rows.size()) + " classes";
  return outcome;
}

PipelineOutcome run_radio_pursuit(const PipelineConfig& config) {
  RadioWorldOptions options;
  options.grid = config.grid;
  options.n_measurements = config.n_measurements;
  options.omit_one_building = true;
  options.min_shadow_measurements = 2;
  RngStream world_rng = RngStream::substream(config.world_seed, 0);
  const RadioToyWorld world = random_world(world_rng, options);
  const RadioSample sample = simulate_radio(world);

  auto model = load_model_handle(config.model);
  std::shared_ptr<const ModelHandle> inpainter;
  double fraction = 0.0;
  if (config.completion == "zero") {
    fraction = 0.0;
  } else if (config.completion == "inpaint") {
    fraction = 1.0;
  } else if (config.completion == "mixed") {
    fraction = config.completion_fraction;
  } else {
    fail("radio_pursuit: unknown completion '" + config.completion + "'");
  }
  if (fraction > 0.0) inpainter = load_model_handle(config.model_inpainter);

  // Blocks cover the buildings visible in the noisy map plus measurements.
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t b = 0; b < world.buildings.size(); ++b) {
    if (b == world.missing_index) continue;
    groups.push_back(building_pixels(world, b));
  }
  std::vector<double> tx_plane(sample.input.part("tx").begin(), sample.input.part("tx").end());

  RdeProblem problem;
  problem.representation = make_grouped_structural(groups, world.measurement_locations,
                                                   world.grid, world.grid, tx_plane);
  problem.model = model;
  PipelineConfig dist_cfg = config;
  if (dist_cfg.subset.empty() && world.has_missing()) {
    dist_cfg.subset = building_pixels(world, world.missing_index);
  }
  problem.distortion = build_distortion(dist_cfg, model->forward(sample.input));
  problem.perturbation = std::make_shared<MeasurementCompletion>(
      inpainter, tx_plane, groups, world.measurement_locations, world.grid, fraction);
  problem.add_target(sample.input);

  ExplanationResult result = matching_pursuit(problem, config.solver);

  PipelineOutcome outcome;
  const auto& info = problem.representation->block_info();
  const std::string selection_path = out_path(config, "selection.csv");
  {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t step = 0; step < result.selection_order.size(); ++step) {
      const std::size_t b = result.selection_order[step];
      rows.push_back({std::to_string(step), std::to_string(b), info[b].kind,
                      std::to_string(info[b].index),
                      format_double(result.objective_trace[step])});
    }
    write_csv(selection_path, {"step", "block", "kind", "position", "distortion"}, rows);
    outcome.files.push_back(selection_path);
  }
  {
    const std::string gt_path = out_path(config, "ground_truth.pgm");
    write_pgm(gt_path, sample.ground_truth, world.grid, world.grid);
    outcome.files.push_back(gt_path);
    const std::string pred_path = out_path(config, "prediction.pgm");
    write_pgm(pred_path, model->forward(sample.input), world.grid, world.grid);
    outcome.files.push_back(pred_path);
    const std::string city_path = out_path(config, "city.pgm");
    write_pgm(city_path, sample.input.part("city"), world.grid, world.grid);
    outcome.files.push_back(city_path);
    // Selected blocks painted onto one map: buildings at 1.0, measurements 0.5.
    std::vector<double> overlay(world.grid * world.grid, 0.0);
    for (std::size_t step = 0; step < result.selection_order.size(); ++step) {
      const std::size_t b = result.selection_order[step];
      if (info[b].kind == "building") {
        for (std::size_t p : groups[info[b].index]) overlay[p] = 1.0;
      } else {
        overlay[info[b].index] = 0.5;
      }
    }
    const std::string sel_path = out_path(config, "selection.pgm");
    write_pgm(sel_path, overlay, world.grid, world.grid);
    outcome.files.push_back(sel_path);
  }
  json body = result_core_json(result, selection_path);
  body["world"] = {{"tx", {world.tx_x, world.tx_y}},
                   {"missing_building", world.missing_index},
                   {"n_buildings", world.buildings.size()},
                   {"n_measurements", world.measurement_locations.size()}};
  write_result_json(config, outcome, std::move(body));
  std::ostringstream os;
  os << "radio_pursuit: " << result.selection_order.size() << " selections, final distortion "
     << format_double(result.distortion.mean);
  outcome.summary = os.str();
  outcome.result = std::move(result);
  return outcome;
}

PipelineOutcome run_interpretation_training(const PipelineConfig& config) {
  RadioWorldOptions options;
  options.grid = config.grid;
  options.n_measurements = config.n_measurements;
  options.omit_one_building = true;
  options.min_shadow_measurements = 1;

  const std::vector<RadioSample> train = make_radio_corpus(config.train_seed, config.train_count,
                                                           options);
  const std::vector<RadioSample> heldout =
      make_radio_corpus(config.train_seed ^ 0x8E1DULL, config.heldout_count, options);
  std::vector<TrainExample> train_examples;
  train_examples.reserve(train.size());
  for (const RadioSample& s : train) train_examples.push_back(radio_example(s));

  ModelSpec base = make_radio_regressor(config.grid);
  RngStream init_rng = RngStream::substream(config.train_seed, 0x1217);
  init_params(base, init_rng);

  TrainOptions vanilla_opt;
  vanilla_opt.epochs = config.epochs;
  vanilla_opt.lr = config.train_lr;
  vanilla_opt.seed = config.train_seed;
  vanilla_opt.gamma = 0.0;
  TrainOptions reg_opt = vanilla_opt;
  reg_opt.gamma = config.gamma;

  const ModelSpec vanilla = train_model(base, train_examples, vanilla_opt);
  const ModelSpec regularized = train_model(base, train_examples, reg_opt);

  auto evaluate = [&](const ModelSpec& spec) {
    const NeuralModel handle(spec);
    double l_int = 0.0;
    double task = 0.0;
    std::size_t flagged = 0;
    std::size_t n_values = 0;
    for (const RadioSample& s : heldout) {
      const TrainExample ex = radio_example(s);
      const std::vector<double> out = handle.forward(ex.input);
      for (std::size_t j = 0; j < out.size(); ++j) {
        const double diff = out[j] - ex.target[j];
        task += diff * diff;
        ++n_values;
      }
      if (ex.flagged) {
        l_int += interpretation_loss(handle, ex.input, ex.region, ex.modified);
        ++flagged;
      }
    }
    task /= static_cast<double>(n_values);
    if (flagged > 0) l_int /= static_cast<double>(flagged);
    return std::make_pair(l_int, task);
  };

  const auto [vanilla_lint, vanilla_task] = evaluate(vanilla);
  const auto [reg_lint, reg_task] = evaluate(regularized);

  PipelineOutcome outcome;
  const std::string table_path = out_path(config, "comparison.csv");
  write_csv(table_path, {"model", "l_int_holdout", "task_mse_holdout"},
            {{"vanilla", format_double(vanilla_lint), format_double(vanilla_task)},
             {"interpretation", format_double(reg_lint), format_double(reg_task)}});
  outcome.files.push_back(table_path);

  const std::string vanilla_path = out_path(config, "model_vanilla.json");
  save_model_json(vanilla, vanilla_path);
  outcome.files.push_back(vanilla_path);
  const std::string reg_path = out_path(config, "model_interpretation.json");
  save_model_json(regularized, reg_path);
  outcome.files.push_back(reg_path);

  json body;
  body["comparison"] = {{"vanilla", {{"l_int", vanilla_lint}, {"task_mse", vanilla_task}}},
                        {"interpretation", {{"l_int", reg_lint}, {"task_mse", reg_task}}},
                        {"gamma", config.gamma}};
  body["mask_path"] = table_path;
  write_result_json(config, outcome, std::move(body));
  std::ostringstream os;
  os << "interpretation_training: l_int " << format_double(vanilla_lint) << " -> "
     << format_double(reg_lint);
  outcome.summary = os.str();
  return outcome;
}

PipelineOutcome run_rd_scatter(const PipelineConfig& config) {
  const std::vector<LabeledImage> corpus = load_image_corpus(config.input);
  auto model = load_model_handle(config.model);

  PipelineOutcome outcome;
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    // Matched budgets: both methods share the solver settings; only the
    // representation, the noise grouping, and lambda differ.
    PipelineConfig pixel_cfg = config;
    pixel_cfg.representation = "identity";
    pixel_cfg.obfuscation = "gaussian";
    PipelineConfig wavelet_cfg = config;
    wavelet_cfg.representation = "dwt";
    wavelet_cfg.obfuscation = "gaussian_per_scale";
    wavelet_cfg.solver.lambda = config.lambda_wavelet;

    for (const auto* cfg : {&pixel_cfg, &wavelet_cfg}) {
      RdeProblem problem = build_image_problem(*cfg, corpus[i].image, model);
      SolverConfig solver = cfg->solver;
      solver.seed = RngStream::substream(cfg->solver.seed, i).next_u64();
      const ExplanationResult result = solve_l1(problem, solver);
      rows.push_back({"img" + std::to_string(i), cfg == &pixel_cfg ? "pixel" : "wavelet",
                      format_double(result.l1_normalized),
                      format_double(result.distortion.mean),
                      format_double(result.distortion.std_error)});
    }
  }
  const std::string csv_path = out_path(config, "rd_scatter.csv");
  write_csv(csv_path, {"image_id", "method", "l1_normalized", "distortion_mean",
                       "distortion_stderr"},
            rows);
  outcome.files.push_back(csv_path);
  json body;
  body["mask_path"] = csv_path;
  body["n_images"] = corpus.size();
  write_result_json(config, outcome, std::move(body));
  outcome.summary = "rd_scatter over " + std::to_string(corpus.size()) + " images";
  return outcome;
}

PipelineOutcome run_rd_curve(const PipelineConfig& config) {
  Signal image = read_pgm(config.input);
  auto model = load_model_handle(config.model);
  RdeProblem problem = build_image_problem(config, std::move(image), std::move(model));
  if (config.sweep.empty()) fail("rd_curve: sweep must be non-empty");
  const std::vector<RdPoint> points = rd_curve(problem, config.solver, config.sweep);

  PipelineOutcome outcome;
  std::vector<std::vector<std::string>> rows;
  rows.reserve(points.size());
  for (const RdPoint& p : points) {
    rows.push_back({format_double(p.sweep_value), format_double(p.l1_normalized),
                    format_double(p.distortion_mean), format_double(p.distortion_stderr)});
  }
  const std::string csv_path = out_path(config, "rd_curve.csv");
  write_csv(csv_path, {"sweep_value", "l1_normalized", "distortion_mean", "distortion_stderr"},
            rows);
  outcome.files.push_back(csv_path);
  json body;
  body["mask_path"] = csv_path;
  body["n_points"] = points.size();
  write_result_json(config, outcome, std::move(body));
  outcome.summary = "rd_curve with " + std::to_string(points.size()) + " points";
  return outcome;
}

PipelineOutcome run_oracle(const PipelineConfig& config) {
  Signal image = read_pgm(config.input);
  auto model = load_model_handle(config.model);
  RdeProblem problem = build_image_problem(config, std::move(image), std::move(model));
  const OracleResult oracle = exhaustive_oracle(problem, config.solver.budget,
                                                config.solver.eval_seed,
                                                config.solver.effective_eval_samples());

  PipelineOutcome outcome;
  json body;
  body["mask"] = oracle.mask.values();
  body["distortion"] = oracle.distortion;
  body["budget"] = config.solver.budget;
  write_result_json(config, outcome, std::move(body));
  std::ostringstream os;
  os << "oracle: distortion " << format_double(oracle.distortion) << " with "
     << oracle.mask.sparsity_l0() << " active blocks";
  outcome.summary = os.str();
  return outcome;
}

PipelineOutcome run_train(const PipelineConfig& config) {
  PipelineOutcome outcome;
  json body;
  if (config.pipeline == "train_image_classifier") {
    const std::vector<LabeledImage> corpus =
        make_shape_corpus(config.train_seed, config.train_count + config.heldout_count);
    std::vector<TrainExample> train;
    std::vector<LabeledImage> train_images, test_images;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (i < config.train_count) {
        TrainExample ex;
        ex.input = corpus[i].image;
        ex.label = corpus[i].label;
        train.push_back(std::move(ex));
        train_images.push_back(corpus[i]);
      } else {
        test_images.push_back(corpus[i]);
      }
    }
    ModelSpec model = make_image_classifier(32, config.n_classes);
    RngStream init_rng = RngStream::substream(config.train_seed, 0xC1A55);
    init_params(model, init_rng);
    TrainOptions opt;
    opt.epochs = config.epochs;
    opt.lr = config.train_lr;
    opt.seed = config.train_seed;
    model = train_model(model, train, opt);

    const NeuralModel handle(model);
    const double train_acc = classifier_accuracy(handle, train_images);
    const double test_acc = classifier_accuracy(handle, test_images);

    const std::string model_path =
        config.model.empty() ? out_path(config, "model.json") : config.model;
    save_model_json(model, model_path);
    outcome.files.push_back(model_path);

    fs::create_directories(fs::path(config.out_dir) / "samples");
    const std::size_t dump = std::min<std::size_t>(24, test_images.size());
    for (std::size_t i = 0; i < dump; ++i) {
      std::ostringstream name;
      name << "samples/img" << (i < 10 ? "0" : "") << i << "_label" << test_images[i].label
           << ".pgm";
      const std::string p = out_path(config, name.str());
      write_pgm(p, test_images[i].image.values(), 32, 32);
      outcome.files.push_back(p);
    }
    body["train_accuracy"] = train_acc;
    body["test_accuracy"] = test_acc;
    body["model_path"] = model_path;
    std::ostringstream os;
    os << "train_image_classifier: train acc " << format_double(train_acc) << ", test acc "
       << format_double(test_acc);
    outcome.summary = os.str();
  } else if (config.pipeline == "train_audio_classifier") {
    const std::vector<LabeledSignal1D> corpus = make_instrument_corpus(
        config.train_seed, config.train_count + config.heldout_count, config.audio_length,
        config.n_classes);
    std::vector<TrainExample> train;
    std::size_t test_hits = 0, test_total = 0;
    ModelSpec model = make_audio_classifier(config.audio_length, config.n_classes);
    RngStream init_rng = RngStream::substream(config.train_seed, 0xA0D10);
    init_params(model, init_rng);
    for (std::size_t i = 0; i < config.train_count; ++i) {
      TrainExample ex;
      ex.input = corpus[i].signal;
      ex.label = corpus[i].label;
      train.push_back(std::move(ex));
    }
    TrainOptions opt;
    opt.epochs = config.epochs;
    opt.lr = config.train_lr;
    opt.seed = config.train_seed;
    model = train_model(model, train, opt);
    const NeuralModel handle(model);
    std::vector<std::pair<int, std::vector<double>>> heldout_rows;
    for (std::size_t i = config.train_count; i < corpus.size(); ++i) {
      ++test_total;
      if (argmax_label(handle.forward(corpus[i].signal)) ==
          static_cast<std::size_t>(corpus[i].label)) {
        ++test_hits;
      }
      heldout_rows.emplace_back(corpus[i].label, corpus[i].signal.values());
    }
    const std::string model_path =
        config.model.empty() ? out_path(config, "model.json") : config.model;
    save_model_json(model, model_path);
    outcome.files.push_back(model_path);
    const std::string corpus_path = out_path(config, "audio_corpus.csv");
    write_audio_corpus_csv(corpus_path, heldout_rows);
    outcome.files.push_back(corpus_path);
    const double acc = static_cast<double>(test_hits) / static_cast<double>(test_total);
    body["test_accuracy"] = acc;
    body["model_path"] = model_path;
    body["corpus_path"] = corpus_path;
    outcome.summary = "train_audio_classifier: test acc " + format_double(acc);
  } else if (config.pipeline == "train_radio") {
    RadioWorldOptions options;
    options.grid = config.grid;
    options.n_measurements = config.n_measurements;
    options.omit_one_building = true;
    options.min_shadow_measurements = 1;
    const std::vector<RadioSample> train_set =
        make_radio_corpus(config.train_seed, config.train_count, options);
    const std::vector<RadioSample> heldout =
        make_radio_corpus(config.train_seed ^ 0x8E1D2ULL, config.heldout_count, options);

    std::vector<TrainExample> train_full, train_inpainter;
    for (const RadioSample& s : train_set) {
      train_full.push_back(radio_example(s));
      train_inpainter.push_back(radio_inpainter_example(s));
    }
    ModelSpec full = make_radio_regressor(config.grid);
    ModelSpec inpainter = make_radio_inpainter_model(config.grid);
    RngStream rng_full = RngStream::substream(config.train_seed, 0xF011);
    RngStream rng_inp = RngStream::substream(config.train_seed, 0x104A);
    init_params(full, rng_full);
    init_params(inpainter, rng_inp);
    TrainOptions opt;
    opt.epochs = config.epochs;
    opt.lr = config.train_lr;
    opt.seed = config.train_seed;
    full = train_model(full, train_full, opt);
    inpainter = train_model(inpainter, train_inpainter, opt);

    auto mse = [&](const ModelSpec& spec, bool inpainter_view) {
      const NeuralModel handle(spec);
      double total = 0.0;
      std::size_t count = 0;
      for (const RadioSample& s : heldout) {
        const Signal input = inpainter_view ? radio_inpainter_input(s.world) : s.input;
        const std::vector<double> out = handle.forward(input);
        for (std::size_t j = 0; j < out.size(); ++j) {
          const double diff = out[j] - s.ground_truth[j];
          total += diff * diff;
          ++count;
        }
      }
      return total / static_cast<double>(count);
    };
    // Constant predictor baseline: the mean ground-truth value.
    double mean_value = 0.0;
    std::size_t n_values = 0;
    for (const RadioSample& s : heldout) {
      for (double v : s.ground_truth) {
        mean_value += v;
        ++n_values;
      }
    }
    mean_value /= static_cast<double>(n_values);
    double baseline = 0.0;
    for (const RadioSample& s : heldout) {
      for (double v : s.ground_truth) baseline += (v - mean_value) * (v - mean_value);
    }
    baseline /= static_cast<double>(n_values);

    const std::string full_path =
        config.model.empty() ? out_path(config, "model.json") : config.model;
    save_model_json(full, full_path);
    outcome.files.push_back(full_path);
    const std::string inp_path = config.model_inpainter.empty()
                                     ? out_path(config, "inpainter.json")
                                     : config.model_inpainter;
    save_model_json(inpainter, inp_path);
    outcome.files.push_back(inp_path);

    body["model_mse"] = mse(full, false);
    body["inpainter_mse"] = mse(inpainter, true);
    body["constant_baseline_mse"] = baseline;
    body["model_path"] = full_path;
    body["inpainter_path"] = inp_path;
    std::ostringstream os;
    os << "train_radio: mse " << format_double(body["model_mse"].get<double>()) << " (baseline "
       << format_double(baseline) << ")";
    outcome.summary = os.str();
  } else {
    fail("run_train: unknown training pipeline '" + config.pipeline + "'");
  }
  write_result_json(config, outcome, std::move(body));
  return outcome;
}

PipelineOutcome run_pipeline(const PipelineConfig& config) {
  const std::string& p = config.pipeline;
  if (p == "pixel_rde") return run_pixel_rde(config);
  if (p == "cartoonx") return run_cartoonx(config);
  if (p == "audio_query") return run_audio_query(config);
  if (p == "radio_pursuit") return run_radio_pursuit(config);
  if (p == "interpretation_training") return run_interpretation_training(config);
  if (p == "rd_scatter") return run_rd_scatter(config);
  if (p == "rd_curve") return run_rd_curve(config);
  if (p == "oracle") return run_oracle(config);
  if (p.rfind("train", 0) == 0) return run_train(config);
  fail("run_pipeline: unknown pipeline '" + p + "'");
}

}  // namespace rde
