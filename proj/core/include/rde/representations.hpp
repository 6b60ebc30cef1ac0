#pragma once

#include <memory>
#include <vector>

#include "rde/core.hpp"

namespace rde {

/// Identity transform grouping channels_per_block values per block. Image
/// shapes group the channel tuple of each pixel (planar strided); other
/// shapes group consecutive runs.
std::unique_ptr<RepresentationSystem> make_identity(const Shape& shape,
                                                    std::size_t channels_per_block = 1);

/// Non-overlapping patch_side x patch_side (x channels) pixel groups in
/// row-major patch order.
std::unique_ptr<RepresentationSystem> make_patch(const Shape& image_shape, std::size_t patch_side);

/// Linear dictionary synthesize(h) = sum_j h_j psi_j with d_j = 1. Analysis
/// is available only when the atoms form a well-conditioned basis.
std::unique_ptr<RepresentationSystem> make_dictionary(const std::vector<std::vector<double>>& atoms);

/// Grouped structural representation for radio inputs. Blocks are k1
/// building indicators (each paints a disjoint pixel group of the city
/// part) followed by k2 measurement values (each paints one pixel of the
/// measurement part). The tx part is passed through untouched.
std::unique_ptr<RepresentationSystem> make_grouped_structural(
    const std::vector<std::vector<std::size_t>>& building_pixel_groups,
    const std::vector<std::size_t>& measurement_locations, std::size_t height, std::size_t width,
    std::vector<double> tx_part);

}  // namespace rde
