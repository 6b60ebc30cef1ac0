#include "rde/datasets.hpp"

#include <algorithm>
#include <cmath>

namespace rde {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

std::vector<LabeledImage> make_shape_corpus(std::uint64_t seed, std::size_t count,
                                            std::size_t side) {
  std::vector<LabeledImage> corpus;
  corpus.reserve(count);
  const auto s = static_cast<double>(side);
  for (std::size_t idx = 0; idx < count; ++idx) {
    RngStream rng = RngStream::substream(seed, idx);
    const int label = static_cast<int>(idx % 4);

    // Smooth background gradient.
    const double base = 0.25 + 0.3 * rng.uniform();
    const double gx = (rng.uniform() - 0.5) * 0.5 / s;
    const double gy = (rng.uniform() - 0.5) * 0.5 / s;
    std::vector<double> img(side * side);
    for (std::size_t y = 0; y < side; ++y) {
      for (std::size_t x = 0; x < side; ++x) {
        img[y * side + x] = base + gx * static_cast<double>(x) * 2.0 +
                            gy * static_cast<double>(y) * 2.0;
      }
    }

    const double contrast = (0.35 + 0.25 * rng.uniform()) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    auto paint = [&](std::size_t x, std::size_t y) {
      img[y * side + x] = clamp01(img[y * side + x] + contrast);
    };

    switch (label) {
      case 0: {  // two disjoint squares
        const std::size_t w = 5 + rng.next_u64() % 4;
        const std::size_t half = side / 2;
        const std::size_t x0 = 2 + rng.next_u64() % (half - w - 3);
        const std::size_t y0 = 2 + rng.next_u64() % (half - w - 3);
        const std::size_t x1 = half + 1 + rng.next_u64() % (half - w - 3);
        const std::size_t y1 = half + 1 + rng.next_u64() % (half - w - 3);
        for (std::size_t y = y0; y < y0 + w; ++y) {
          for (std::size_t x = x0; x < x0 + w; ++x) paint(x, y);
        }
        for (std::size_t y = y1; y < y1 + w; ++y) {
          for (std::size_t x = x1; x < x1 + w; ++x) paint(x, y);
        }
        break;
      }
      case 1: {  // ring
        const double r = 7.0 + 3.5 * rng.uniform();
        const double inner = r - 3.5;
        const double cx = r + 2.0 + rng.uniform() * (s - 2.0 * r - 4.0);
        const double cy = r + 2.0 + rng.uniform() * (s - 2.0 * r - 4.0);
        for (std::size_t y = 0; y < side; ++y) {
          for (std::size_t x = 0; x < side; ++x) {
            const double dx = static_cast<double>(x) + 0.5 - cx;
            const double dy = static_cast<double>(y) + 0.5 - cy;
            const double d2 = dx * dx + dy * dy;
            if (d2 <= r * r && d2 >= inner * inner) paint(x, y);
          }
        }
        break;
      }
      case 2: {  // cross
        const std::size_t bar = 3 + rng.next_u64() % 2;
        const std::size_t len = 16 + rng.next_u64() % 7;
        const std::size_t cx = len / 2 + 2 + rng.next_u64() % (side - len - 4);
        const std::size_t cy = len / 2 + 2 + rng.next_u64() % (side - len - 4);
        for (std::size_t y = cy - len / 2; y < cy - len / 2 + len; ++y) {
          for (std::size_t x = cx - bar / 2; x < cx - bar / 2 + bar; ++x) paint(x, y);
        }
        for (std::size_t y = cy - bar / 2; y < cy - bar / 2 + bar; ++y) {
          for (std::size_t x = cx - len / 2; x < cx - len / 2 + len; ++x) paint(x, y);
        }
        break;
      }
      default: {  // stripes
        const std::size_t bar = 3;
        const std::size_t gap = 3 + rng.next_u64() % 3;
        const std::size_t n_bars = 3;
        const std::size_t total = n_bars * bar + (n_bars - 1) * gap;
        const std::size_t y0 = 2 + rng.next_u64() % (side - total - 4);
        const std::size_t x0 = 2 + rng.next_u64() % 6;
        const std::size_t x1 = side - 2 - rng.next_u64() % 6;
        for (std::size_t b = 0; b < n_bars; ++b) {
          for (std::size_t y = y0 + b * (bar + gap); y < y0 + b * (bar + gap) + bar; ++y) {
            for (std::size_t x = x0; x < x1; ++x) paint(x, y);
          }
        }
        break;
      }
    }

    for (double& v : img) v = clamp01(v + 0.01 * rng.gaussian());
    corpus.push_back({Signal(std::move(img), Shape::image(side, side, 1)), label});
  }
  return corpus;
}

std::vector<LabeledSignal1D> make_instrument_corpus(std::uint64_t seed, std::size_t count,
                                                    std::size_t length, int n_classes) {
  std::vector<LabeledSignal1D> corpus;
  corpus.reserve(count);
  for (std::size_t idx = 0; idx < count; ++idx) {
    RngStream rng = RngStream::substream(seed ^ 0xA0D10ULL, idx);
    const int label = static_cast<int>(idx % static_cast<std::size_t>(n_classes));
    // Class-specific fundamental and harmonic decay.
    const double fundamental = 3.0 + 3.0 * label;
    const double decay = 0.45 + 0.18 * label;
    const int harmonics = 5;

    std::vector<double> x(length, 0.0);
    for (int hi = 1; hi <= harmonics; ++hi) {
      const double bin = fundamental * hi;
      if (bin >= static_cast<double>(length) / 2.0) break;
      const double amp = std::pow(decay, hi - 1) * (0.8 + 0.4 * rng.uniform());
      const double phase = 2.0 * M_PI * rng.uniform();
      for (std::size_t l = 0; l < length; ++l) {
        x[l] += amp * std::cos(2.0 * M_PI * bin * static_cast<double>(l) /
                                   static_cast<double>(length) +
                               phase);
      }
    }
    for (double& v : x) v += 0.01 * rng.gaussian();
    double norm = 0.0;
    for (double v : x) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (double& v : x) v /= norm;
    }
    corpus.push_back({Signal(std::move(x), Shape::vector(length)), label});
  }
  return corpus;
}

ModelSpec make_image_classifier(std::size_t side, int n_classes) {
  ModelSpec model;
  model.task = Task::classification;
  model.input_shape = Shape::image(side, side, 1);
  model.layers.push_back(Layer::conv2d(1, 8, 5, 2));
  model.layers.push_back(Layer::relu());
  model.layers.push_back(Layer::conv2d(8, 16, 3, 2));
  model.layers.push_back(Layer::relu());
  model.layers.push_back(Layer::flatten());
  const std::size_t flat = (side / 4) * (side / 4) * 16;
  model.layers.push_back(Layer::dense(flat, 48));
  model.layers.push_back(Layer::relu());
  model.layers.push_back(Layer::dense(48, static_cast<std::size_t>(n_classes)));
  return model;
}

ModelSpec make_audio_classifier(std::size_t length, int n_classes) {
  ModelSpec model;
  model.task = Task::classification;
  model.input_shape = Shape::vector(length);
  model.layers.push_back(Layer::dense(length, 48));
  model.layers.push_back(Layer::relu());
  model.layers.push_back(Layer::dense(48, 24));
  model.layers.push_back(Layer::relu());
  model.layers.push_back(Layer::dense(24, static_cast<std::size_t>(n_classes)));
  return model;
}

namespace {

ModelSpec make_map_regressor(Shape input, std::size_t in_channels, std::size_t channels) {
  ModelSpec model;
  model.task = Task::regression;
  model.input_shape = std::move(input);
  model.layers.push_back(Layer::conv2d(in_channels, channels, 5, 1));
  model.layers.push_back(Layer::relu());
  model.layers.push_back(Layer::conv2d(channels, channels, 5, 1));
  model.layers.push_back(Layer::relu());
  model.layers.push_back(Layer::conv2d(channels, channels, 5, 1));
  model.layers.push_back(Layer::relu());
  model.layers.push_back(Layer::conv2d(channels, 1, 5, 1));
  model.layers.push_back(Layer::flatten());
  return model;
}

}  // namespace

ModelSpec make_radio_regressor(std::size_t grid, std::size_t channels) {
  return make_map_regressor(
      Shape::composite({{"tx", {grid, grid}}, {"city", {grid, grid}}, {"meas", {grid, grid}}}), 3,
      channels);
}

ModelSpec make_radio_inpainter_model(std::size_t grid, std::size_t channels) {
  return make_map_regressor(Shape::composite({{"tx", {grid, grid}}, {"city", {grid, grid}}}), 2,
                            channels);
}

TrainExample radio_example(const RadioSample& sample) {
  TrainExample ex;
  ex.input = sample.input;
  ex.target = sample.ground_truth;
  if (sample.world.has_missing()) {
    ex.flagged = true;
    ex.region = building_pixels(sample.world, sample.world.missing_index);
    // Building channel zeroed; tx and measurements untouched.
    std::vector<double> values = sample.input.values();
    const std::size_t plane = sample.world.grid * sample.world.grid;
    std::fill(values.begin() + static_cast<long>(plane),
              values.begin() + static_cast<long>(2 * plane), 0.0);
    ex.modified = Signal(std::move(values), sample.input.shape());
  }
  return ex;
}

TrainExample radio_inpainter_example(const RadioSample& sample) {
  TrainExample ex;
  ex.input = radio_inpainter_input(sample.world);
  ex.target = sample.ground_truth;
  return ex;
}

std::vector<RadioSample> make_radio_corpus(std::uint64_t seed, std::size_t count,
                                           const RadioWorldOptions& options) {
  std::vector<RadioSample> corpus;
  corpus.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    RngStream rng = RngStream::substream(seed ^ 0x4AD10ULL, i);
    corpus.push_back(simulate_radio(random_world(rng, options)));
  }
  return corpus;
}

}  // namespace rde
