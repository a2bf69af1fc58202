#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedia/grid.hpp"

namespace fedia {

// Face: 4-neighborhood on 2D slices, 6 on 3D volumes.
// FaceDiagonal: 8-neighborhood on 2D, 26 on 3D.
enum class Connectivity { Face, FaceDiagonal };

struct ComponentMap {
    Grid3<std::int32_t> labels;       // 0 = background, 1..count = component ids
    int count = 0;                    // number of components
    std::vector<std::size_t> sizes;   // sizes[i] = voxel count of component i+1
};

// Labels connected components of a binary mask. Component ids follow
// first-visit order of a depth/row/column raster scan. A 2D mask is a
// grid with depth == 1.
ComponentMap label_components(const Mask3& mask, Connectivity conn);

// Number of components with at least min_size voxels.
int count_components(const Mask3& mask, Connectivity conn, std::size_t min_size = 1);

// Same, for one 2D slice given as a contiguous height*width span.
int count_components_slice(std::span<const std::uint8_t> slice, int height, int width,
                           Connectivity conn, std::size_t min_size = 1);

}  // namespace fedia
