#include "fedia/ccl.hpp"

#include <array>

namespace fedia {

namespace {

// Offsets of already-scanned neighbors (lexicographically before the
// current voxel in depth/row/column order).
struct Offset {
    int dd, dh, dw;
};

std::vector<Offset> prior_offsets(Connectivity conn) {
    std::vector<Offset> offs;
    if (conn == Connectivity::Face) {
        offs = {{-1, 0, 0}, {0, -1, 0}, {0, 0, -1}};
    } else {
        for (int dd = -1; dd <= 0; ++dd)
            for (int dh = -1; dh <= 1; ++dh)
                for (int dw = -1; dw <= 1; ++dw) {
                    if (dd == 0 && (dh > 0 || (dh == 0 && dw >= 0))) continue;
                    offs.push_back({dd, dh, dw});
                }
    }
    return offs;
}

struct UnionFind {
    std::vector<std::int32_t> parent;

    std::int32_t make() {
        parent.push_back(static_cast<std::int32_t>(parent.size()));
        return parent.back();
    }

    std::int32_t find(std::int32_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }

    void unite(std::int32_t a, std::int32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        // Keep the smaller provisional id as root so first-visit order survives.
        if (a < b)
            parent[b] = a;
        else
            parent[a] = b;
    }
};

}  // namespace

ComponentMap label_components(const Mask3& mask, Connectivity conn) {
    ComponentMap out;
    out.labels = Grid3<std::int32_t>(mask.depth, mask.height, mask.width, 0);

    const auto offs = prior_offsets(conn);
    UnionFind uf;
    std::vector<std::int32_t> provisional(mask.size(), -1);

    // Pass 1: assign provisional labels, merging with prior neighbors.
    for (int d = 0; d < mask.depth; ++d) {
        for (int h = 0; h < mask.height; ++h) {
            for (int w = 0; w < mask.width; ++w) {
                const std::size_t idx = mask.index(d, h, w);
                if (!mask.data[idx]) continue;
                std::int32_t label = -1;
                for (const auto& o : offs) {
                    const int nd = d + o.dd, nh = h + o.dh, nw = w + o.dw;
                    if (!mask.in_bounds(nd, nh, nw)) continue;
                    const std::int32_t nl = provisional[mask.index(nd, nh, nw)];
                    if (nl < 0) continue;
                    if (label < 0)
                        label = uf.find(nl);
                    else
                        uf.unite(label, nl);
                }
                if (label < 0) label = uf.make();
                provisional[idx] = label;
            }
        }
    }

    // Pass 2: renumber roots 1..n by first occurrence in scan order.
    std::vector<std::int32_t> final_label(uf.parent.size(), 0);
    for (std::size_t idx = 0; idx < mask.size(); ++idx) {
        if (provisional[idx] < 0) continue;
        const std::int32_t root = uf.find(provisional[idx]);
        if (final_label[root] == 0) {
            final_label[root] = ++out.count;
            out.sizes.push_back(0);
        }
        const std::int32_t lbl = final_label[root];
        out.labels.data[idx] = lbl;
        ++out.sizes[lbl - 1];
    }
    return out;
}

int count_components(const Mask3& mask, Connectivity conn, std::size_t min_size) {
    const ComponentMap cm = label_components(mask, conn);
    int n = 0;
    for (auto s : cm.sizes) n += (s >= min_size);
    return n;
}

int count_components_slice(std::span<const std::uint8_t> slice, int height, int width,
                           Connectivity conn, std::size_t min_size) {
    Mask3 m(1, height, width);
    std::copy(slice.begin(), slice.end(), m.data.begin());
    return count_components(m, conn, min_size);
}

}  // namespace fedia
