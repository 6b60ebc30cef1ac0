#pragma once

#include <cstdint>
#include <vector>

#include "rde/models.hpp"
#include "rde/radio.hpp"

namespace rde {

struct LabeledImage {
  Signal image;
  int label = 0;
};

/// Synthetic piecewise-smooth greyscale images: a smooth background gradient
/// plus one piecewise-constant shape per class (rectangle, disk, cross,
/// stripes). Labels cycle 0..3.
std::vector<LabeledImage> make_shape_corpus(std::uint64_t seed, std::size_t count,
                                            std::size_t side = 32);

struct LabeledSignal1D {
  Signal signal;
  int label = 0;
};

/// Synthetic harmonic "instruments": each class is a comb of harmonics over
/// a class-specific fundamental with a class-specific decay profile.
/// Signals are normalized to unit power.
std::vector<LabeledSignal1D> make_instrument_corpus(std::uint64_t seed, std::size_t count,
                                                    std::size_t length = 128, int n_classes = 3);

/// Small strided CNN for the 4-class shape task.
ModelSpec make_image_classifier(std::size_t side = 32, int n_classes = 4);

/// MLP over raw 1D signals for the instrument task.
ModelSpec make_audio_classifier(std::size_t length = 128, int n_classes = 3);

/// Fully convolutional map regressor over the composite [tx, city, meas]
/// radio input.
ModelSpec make_radio_regressor(std::size_t grid = 32, std::size_t channels = 8);

/// Map regressor over [tx, city] only; used as the measurement inpainter.
ModelSpec make_radio_inpainter_model(std::size_t grid = 32, std::size_t channels = 8);

/// Training example for the full radio model. Flagged samples carry the
/// missing building's pixel region and the building-erased input.
TrainExample radio_example(const RadioSample& sample);

/// Training example for the inpainter model (no measurement channel).
TrainExample radio_inpainter_example(const RadioSample& sample);

std::vector<RadioSample> make_radio_corpus(std::uint64_t seed, std::size_t count,
                                           const RadioWorldOptions& options);

}  // namespace rde
