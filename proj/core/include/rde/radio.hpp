#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "rde/core.hpp"

namespace rde {

struct BuildingRect {
  std::size_t x0 = 0, y0 = 0;
  std::size_t width = 0, height = 0;

  bool contains(std::size_t x, std::size_t y) const {
    return x >= x0 && x < x0 + width && y >= y0 && y < y0 + height;
  }
};

/// Desk-scale radio propagation world on a square grid: line-of-sight decay
/// with a multiplicative shadow factor behind buildings. One designated
/// building may be omitted from the input city map while still casting
/// shadows in the ground truth.
struct RadioToyWorld {
  std::size_t grid = 32;
  std::vector<BuildingRect> buildings;
  std::size_t missing_index = static_cast<std::size_t>(-1);  // omitted from the city map
  std::size_t tx_x = 0, tx_y = 0;
  double attenuation = 0.02;
  double shadow_factor = 0.25;
  std::vector<std::size_t> measurement_locations;  // pixel indices, row-major

  bool has_missing() const { return missing_index < buildings.size(); }
};

/// True if the segment between the two points crosses the rectangle.
bool segment_hits_rect(double x0, double y0, double x1, double y1, const BuildingRect& rect);

/// Signal strength at every pixel: max(0, 1 - attenuation * dist(p, Tx)),
/// multiplied by shadow_factor when the Tx->p segment crosses any building.
std::vector<double> radio_ground_truth(const RadioToyWorld& world);

/// Pixels whose line of sight to the Tx crosses the given building.
std::vector<std::size_t> shadow_region(const RadioToyWorld& world, std::size_t building_index);

/// Pixel group (row-major indices) covered by a building.
std::vector<std::size_t> building_pixels(const RadioToyWorld& world, std::size_t building_index);

struct RadioSample {
  Signal input;  // composite [tx, city, meas]
  std::vector<double> ground_truth;
  RadioToyWorld world;
};

/// Composite model input: one-hot Tx map, the noisy city map (missing
/// building omitted), and ground-truth measurements at the chosen locations.
RadioSample simulate_radio(const RadioToyWorld& world);

/// Same world viewed by the inpainter model: [tx, city] only.
Signal radio_inpainter_input(const RadioToyWorld& world);

/// Completion of unchosen radio measurements: zeros (fraction 0), the
/// inpainter model's predicted map sampled at the measurement locations
/// (fraction 1), or a seeded mixture. The inpainter is conditioned on the
/// buildings selected by the mask; building entries of v are always zero.
class MeasurementCompletion final : public PerturbationDistribution {
public:
  MeasurementCompletion(std::shared_ptr<const ModelHandle> inpainter, std::vector<double> tx_plane,
                        std::vector<std::vector<std::size_t>> building_groups,
                        std::vector<std::size_t> measurement_locations, std::size_t grid,
                        double fraction);

  CoefficientVector sample(const CoefficientVector& h, const Mask& s,
                           RngStream& rng) const override;
  bool deterministic() const override { return fraction_ <= 0.0 || fraction_ >= 1.0; }

private:
  std::shared_ptr<const ModelHandle> inpainter_;
  std::vector<double> tx_;
  std::vector<std::vector<std::size_t>> groups_;
  std::vector<std::size_t> locations_;
  std::size_t grid_;
  double fraction_;
};

struct RadioWorldOptions {
  std::size_t grid = 32;
  std::size_t min_buildings = 3, max_buildings = 5;
  std::size_t min_side = 4, max_side = 8;
  std::size_t n_measurements = 40;
  bool omit_one_building = false;       // drop a line-of-sight building from the map
  std::size_t min_shadow_measurements = 0;  // required measurements behind the omitted one
};

/// Seeded random world; retries placement until the options are satisfied.
RadioToyWorld random_world(RngStream& rng, const RadioWorldOptions& options);

}  // namespace rde
