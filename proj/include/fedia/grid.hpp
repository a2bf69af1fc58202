#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedia/errors.hpp"

namespace fedia {

// Dense 3D grid, depth-major row-major layout; each depth slice is a
// contiguous height*width block. 2D data is a grid with depth == 1.
template <typename T>
struct Grid3 {
    int depth = 0;
    int height = 0;
    int width = 0;
    std::vector<T> data;

    Grid3() = default;
    Grid3(int d, int h, int w, T fill = T{})
        : depth(d), height(h), width(w),
          data(static_cast<std::size_t>(d) * h * w, fill) {
        if (d < 1 || h < 1 || w < 1) throw ShapeError("grid dimensions must be >= 1");
    }

    std::size_t size() const { return data.size(); }
    std::size_t slice_size() const { return static_cast<std::size_t>(height) * width; }

    T& at(int d, int h, int w) { return data[index(d, h, w)]; }
    const T& at(int d, int h, int w) const { return data[index(d, h, w)]; }

    std::size_t index(int d, int h, int w) const {
        return (static_cast<std::size_t>(d) * height + h) * width + w;
    }

    bool in_bounds(int d, int h, int w) const {
        return d >= 0 && d < depth && h >= 0 && h < height && w >= 0 && w < width;
    }

    std::span<T> slice(int d) { return {data.data() + d * slice_size(), slice_size()}; }
    std::span<const T> slice(int d) const {
        return {data.data() + d * slice_size(), slice_size()};
    }

    bool same_shape(const Grid3& other) const {
        return depth == other.depth && height == other.height && width == other.width;
    }

    friend bool operator==(const Grid3&, const Grid3&) = default;
};

using Mask3 = Grid3<std::uint8_t>;
using Image3 = Grid3<float>;

inline std::size_t count_nonzero(const Mask3& mask) {
    std::size_t n = 0;
    for (auto v : mask.data) n += (v != 0);
    return n;
}

// a subset-of b, voxelwise.
inline bool mask_subset(const Mask3& a, const Mask3& b) {
    if (!a.same_shape(b)) throw ShapeError("mask_subset: shapes differ");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.data[i] && !b.data[i]) return false;
    return true;
}

}  // namespace fedia
