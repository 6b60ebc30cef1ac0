#include "rde/radio.hpp"

#include <algorithm>
#include <cmath>

namespace rde {

namespace {

double pixel_center(std::size_t i) { return static_cast<double>(i) + 0.5; }

bool any_building_hit(const RadioToyWorld& world, double x1, double y1) {
  const double tx = pixel_center(world.tx_x);
  const double ty = pixel_center(world.tx_y);
  for (const BuildingRect& b : world.buildings) {
    if (segment_hits_rect(tx, ty, x1, y1, b)) return true;
  }
  return false;
}

bool rects_overlap(const BuildingRect& a, const BuildingRect& b, std::size_t margin) {
  const long ax0 = static_cast<long>(a.x0) - static_cast<long>(margin);
  const long ay0 = static_cast<long>(a.y0) - static_cast<long>(margin);
  const long ax1 = static_cast<long>(a.x0 + a.width) + static_cast<long>(margin);
  const long ay1 = static_cast<long>(a.y0 + a.height) + static_cast<long>(margin);
  return static_cast<long>(b.x0) < ax1 && static_cast<long>(b.x0 + b.width) > ax0 &&
         static_cast<long>(b.y0) < ay1 && static_cast<long>(b.y0 + b.height) > ay0;
}

}  // namespace

bool segment_hits_rect(double x0, double y0, double x1, double y1, const BuildingRect& rect) {
  // Liang-Barsky clipping of the parametric segment against the rect slab.
  const double rx0 = static_cast<double>(rect.x0);
  const double ry0 = static_cast<double>(rect.y0);
  const double rx1 = static_cast<double>(rect.x0 + rect.width);
  const double ry1 = static_cast<double>(rect.y0 + rect.height);
  const double dx = x1 - x0;
  const double dy = y1 - y0;
  double t_min = 0.0;
  double t_max = 1.0;

  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {x0 - rx0, rx1 - x0, y0 - ry0, ry1 - y0};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;  // parallel and outside
      continue;
    }
    const double t = q[i] / p[i];
    if (p[i] < 0.0) {
      t_min = std::max(t_min, t);
    } else {
      t_max = std::min(t_max, t);
    }
  }
  // Require a crossing of positive length (grazing a corner does not count).
  return t_max - t_min > 1e-9;
}

std::vector<double> radio_ground_truth(const RadioToyWorld& world) {
  const std::size_t n = world.grid;
  std::vector<double> out(n * n);
  const double tx = pixel_center(world.tx_x);
  const double ty = pixel_center(world.tx_y);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double px = pixel_center(x);
      const double py = pixel_center(y);
      const double dist = std::hypot(px - tx, py - ty);
      double value = std::max(0.0, 1.0 - world.attenuation * dist);
      if (any_building_hit(world, px, py)) value *= world.shadow_factor;
      out[y * n + x] = value;
    }
  }
  return out;
}

std::vector<std::size_t> shadow_region(const RadioToyWorld& world, std::size_t building_index) {
  std::vector<std::size_t> region;
  const std::size_t n = world.grid;
  const BuildingRect& b = world.buildings[building_index];
  const double tx = pixel_center(world.tx_x);
  const double ty = pixel_center(world.tx_y);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      if (segment_hits_rect(tx, ty, pixel_center(x), pixel_center(y), b)) {
        region.push_back(y * n + x);
      }
    }
  }
  return region;
}

std::vector<std::size_t> building_pixels(const RadioToyWorld& world, std::size_t building_index) {
  std::vector<std::size_t> pixels;
  const BuildingRect& b = world.buildings[building_index];
  for (std::size_t y = b.y0; y < b.y0 + b.height; ++y) {
    for (std::size_t x = b.x0; x < b.x0 + b.width; ++x) {
      pixels.push_back(y * world.grid + x);
    }
  }
  return pixels;
}

RadioSample simulate_radio(const RadioToyWorld& world) {
  const std::size_t n = world.grid;
  const std::size_t plane = n * n;
  std::vector<double> values(3 * plane, 0.0);
  values[world.tx_y * n + world.tx_x] = 1.0;

  double* city = values.data() + plane;
  for (std::size_t b = 0; b < world.buildings.size(); ++b) {
    if (b == world.missing_index) continue;
    for (std::size_t p : building_pixels(world, b)) city[p] = 1.0;
  }

  RadioSample sample;
  sample.ground_truth = radio_ground_truth(world);
  double* meas = values.data() + 2 * plane;
  for (std::size_t p : world.measurement_locations) meas[p] = sample.ground_truth[p];

  sample.input = Signal(std::move(values),
                        Shape::composite({{"tx", {n, n}}, {"city", {n, n}}, {"meas", {n, n}}}));
  sample.world = world;
  return sample;
}

Signal radio_inpainter_input(const RadioToyWorld& world) {
  const std::size_t n = world.grid;
  const std::size_t plane = n * n;
  std::vector<double> values(2 * plane, 0.0);
  values[world.tx_y * n + world.tx_x] = 1.0;
  double* city = values.data() + plane;
  for (std::size_t b = 0; b < world.buildings.size(); ++b) {
    if (b == world.missing_index) continue;
    for (std::size_t p : building_pixels(world, b)) city[p] = 1.0;
  }
  return Signal(std::move(values), Shape::composite({{"tx", {n, n}}, {"city", {n, n}}}));
}

MeasurementCompletion::MeasurementCompletion(std::shared_ptr<const ModelHandle> inpainter,
                                             std::vector<double> tx_plane,
                                             std::vector<std::vector<std::size_t>> building_groups,
                                             std::vector<std::size_t> measurement_locations,
                                             std::size_t grid, double fraction)
    : inpainter_(std::move(inpainter)),
      tx_(std::move(tx_plane)),
      groups_(std::move(building_groups)),
      locations_(std::move(measurement_locations)),
      grid_(grid),
      fraction_(fraction) {
  if (fraction_ > 0.0 && !inpainter_) {
    fail("measurement completion: inpainting requested but no inpainter model is available");
  }
  if (tx_.size() != grid_ * grid_) fail("measurement completion: tx plane size mismatch");
}

CoefficientVector MeasurementCompletion::sample(const CoefficientVector& h, const Mask& s,
                                                RngStream& rng) const {
  CoefficientVector v = CoefficientVector::zeros_like(h);
  if (fraction_ <= 0.0) return v;

  const std::size_t plane = grid_ * grid_;
  std::vector<double> values(2 * plane, 0.0);
  std::copy(tx_.begin(), tx_.end(), values.begin());
  double* city = values.data() + plane;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    if (s[g] > 0.5) {
      for (std::size_t p : groups_[g]) city[p] = 1.0;
    }
  }
  const Signal input(std::move(values),
                     Shape::composite({{"tx", {grid_, grid_}}, {"city", {grid_, grid_}}}));
  const std::vector<double> predicted = inpainter_->forward(input);

  const bool full = fraction_ >= 1.0;
  for (std::size_t j = 0; j < locations_.size(); ++j) {
    const bool use_prediction = full || rng.uniform() < fraction_;
    if (use_prediction) {
      v.block(groups_.size() + j)[0] = predicted[locations_[j]];
    }
  }
  return v;
}

RadioToyWorld random_world(RngStream& rng, const RadioWorldOptions& options) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    RadioToyWorld world;
    world.grid = options.grid;
    const std::size_t n = options.grid;

    const std::size_t span = options.max_buildings - options.min_buildings + 1;
    const std::size_t count = options.min_buildings + rng.next_u64() % span;
    bool placed_all = true;
    for (std::size_t b = 0; b < count; ++b) {
      bool placed = false;
      for (int tries = 0; tries < 50 && !placed; ++tries) {
        BuildingRect rect;
        const std::size_t side_span = options.max_side - options.min_side + 1;
        rect.width = options.min_side + rng.next_u64() % side_span;
        rect.height = options.min_side + rng.next_u64() % side_span;
        if (rect.width + 2 >= n || rect.height + 2 >= n) continue;
        rect.x0 = 1 + rng.next_u64() % (n - rect.width - 2);
        rect.y0 = 1 + rng.next_u64() % (n - rect.height - 2);
        bool ok = true;
        for (const BuildingRect& other : world.buildings) {
          if (rects_overlap(rect, other, 1)) {
            ok = false;
            break;
          }
        }
        if (ok) {
          world.buildings.push_back(rect);
          placed = true;
        }
      }
      if (!placed) {
        placed_all = false;
        break;
      }
    }
    if (!placed_all) continue;

    // Tx on a free pixel.
    bool tx_ok = false;
    for (int tries = 0; tries < 200 && !tx_ok; ++tries) {
      const std::size_t x = rng.next_u64() % n;
      const std::size_t y = rng.next_u64() % n;
      bool inside = false;
      for (const BuildingRect& b : world.buildings) inside = inside || b.contains(x, y);
      if (!inside) {
        world.tx_x = x;
        world.tx_y = y;
        tx_ok = true;
      }
    }
    if (!tx_ok) continue;

    if (options.omit_one_building) {
      // Pick a building whose face is in direct line of sight of the Tx.
      std::vector<std::size_t> candidates;
      for (std::size_t b = 0; b < world.buildings.size(); ++b) {
        const BuildingRect& rect = world.buildings[b];
        const double cx = static_cast<double>(rect.x0) + rect.width * 0.5;
        const double cy = static_cast<double>(rect.y0) + rect.height * 0.5;
        bool blocked = false;
        for (std::size_t other = 0; other < world.buildings.size(); ++other) {
          if (other == b) continue;
          if (segment_hits_rect(pixel_center(world.tx_x), pixel_center(world.tx_y), cx, cy,
                                world.buildings[other])) {
            blocked = true;
            break;
          }
        }
        if (!blocked) candidates.push_back(b);
      }
      if (candidates.empty()) continue;
      world.missing_index = candidates[rng.next_u64() % candidates.size()];
    }

    // Measurements on distinct non-building pixels of the visible map.
    std::vector<std::size_t> shadow;
    if (world.has_missing()) shadow = shadow_region(world, world.missing_index);
    std::vector<bool> taken(n * n, false);
    std::size_t shadow_count = 0;
    for (int tries = 0; tries < 4000 && world.measurement_locations.size() < options.n_measurements;
         ++tries) {
      const std::size_t p = rng.next_u64() % (n * n);
      if (taken[p]) continue;
      const std::size_t x = p % n;
      const std::size_t y = p / n;
      bool inside = false;
      for (std::size_t b = 0; b < world.buildings.size(); ++b) {
        if (b == world.missing_index) continue;
        inside = inside || world.buildings[b].contains(x, y);
      }
      if (inside || (x == world.tx_x && y == world.tx_y)) continue;
      taken[p] = true;
      world.measurement_locations.push_back(p);
      if (std::find(shadow.begin(), shadow.end(), p) != shadow.end()) ++shadow_count;
    }
    if (world.measurement_locations.size() < options.n_measurements) continue;
    if (world.has_missing() && shadow_count < options.min_shadow_measurements) continue;

    std::sort(world.measurement_locations.begin(), world.measurement_locations.end());
    return world;
  }
  fail("random_world: could not satisfy the world options");
}

}  // namespace rde
