#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ragent/matrix.hpp"

namespace ragent {

/// 256-entry viridis-style colormap (RGB).
const std::array<std::array<std::uint8_t, 3>, 256>& viridis_lut();

/// Renders a time map as an 8-bit RGB PNG: time runs left to right, the last column of the map is the
/// top row of the image, values are min-max scaled per image, each cell becomes scale x scale pixels.
std::vector<std::uint8_t> render_png(const Matrix& map, int scale = 4);

}  // namespace ragent
