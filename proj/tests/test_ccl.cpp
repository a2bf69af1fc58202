#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fedia/ccl.hpp"
#include "fedia/rng.hpp"
#include "oracles.hpp"

using namespace fedia;

namespace {

Mask3 random_mask(Rng& rng, int d, int h, int w, double fill) {
    Mask3 m(d, h, w);
    for (auto& v : m.data) v = rng.uniform() < fill ? 1 : 0;
    return m;
}

Mask3 from_rows(const std::vector<std::vector<int>>& rows) {
    Mask3 m(1, static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (int h = 0; h < m.height; ++h)
        for (int w = 0; w < m.width; ++w) m.at(0, h, w) = rows[h][w] ? 1 : 0;
    return m;
}

}  // namespace

TEST_CASE("empty mask has zero components") {
    Mask3 m(1, 4, 4);
    const auto cm = label_components(m, Connectivity::Face);
    CHECK(cm.count == 0);
    CHECK(cm.sizes.empty());
    CHECK(count_components(m, Connectivity::Face) == 0);
}

TEST_CASE("two visibly disjoint runs under face connectivity") {
    const auto m = from_rows({{1, 1, 0}, {0, 0, 0}, {0, 1, 1}});
    const auto cm = label_components(m, Connectivity::Face);
    CHECK(cm.count == 2);
    CHECK(cm.labels.at(0, 0, 0) == 1);
    CHECK(cm.labels.at(0, 0, 1) == 1);
    CHECK(cm.labels.at(0, 2, 1) == 2);
    CHECK(cm.sizes == std::vector<std::size_t>{2, 2});
}

TEST_CASE("labels are consecutive, cover all foreground, scan-ordered") {
    Rng rng(make_rng(99, Stream::Aux).next_u64());
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = random_mask(rng, 4, 6, 6, 0.35);
        for (auto conn : {Connectivity::Face, Connectivity::FaceDiagonal}) {
            const auto cm = label_components(m, conn);
            std::int32_t seen_max = 0;
            for (std::size_t i = 0; i < m.size(); ++i) {
                if (m.data[i]) {
                    CHECK(cm.labels.data[i] > 0);
                    // First-visit order: a new label can only be one past the max so far.
                    CHECK(cm.labels.data[i] <= seen_max + 1);
                    seen_max = std::max(seen_max, cm.labels.data[i]);
                } else {
                    CHECK(cm.labels.data[i] == 0);
                }
            }
            CHECK(seen_max == cm.count);
            std::size_t total = 0;
            for (auto s : cm.sizes) total += s;
            CHECK(total == count_nonzero(m));
        }
    }
}

TEST_CASE("agreement with flood-fill oracle on random grids") {
    Rng rng(make_rng(7, Stream::Aux).next_u64());
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const bool flat = trial % 2 == 0;
        const auto m = flat ? random_mask(rng, 1, 8, 8, 0.4) : random_mask(rng, 8, 8, 8, 0.3);
        for (auto conn : {Connectivity::Face, Connectivity::FaceDiagonal}) {
            const auto cm = label_components(m, conn);
            const auto fr = oracle::flood_fill(m, conn);
            REQUIRE(cm.count == fr.count);
            // Both label in first-visit scan order, so maps must be identical.
            REQUIRE(cm.labels.data == fr.labels.data);
            REQUIRE(cm.sizes == fr.sizes);
            ++checked;
        }
    }
    CHECK(checked == 200);
}

TEST_CASE("count_components honors min_size") {
    // Components of sizes 1, 5, 7 in one 2D mask.
    Mask3 m(1, 8, 10);
    m.at(0, 0, 0) = 1;                                    // size 1
    for (int w = 0; w < 5; ++w) m.at(0, 3, w) = 1;        // size 5
    for (int w = 0; w < 7; ++w) m.at(0, 6, w + 2) = 1;    // size 7
    CHECK(count_components(m, Connectivity::Face, 3) == 2);
    CHECK(count_components(m, Connectivity::Face, 1) ==
          label_components(m, Connectivity::Face).count);

    Rng rng(make_rng(13, Stream::Aux).next_u64());
    for (int trial = 0; trial < 30; ++trial) {
        const auto rm = random_mask(rng, 1, 10, 10, 0.35);
        const std::size_t s = 1 + static_cast<std::size_t>(rng.uniform_int(0, 4));
        // Oracle: erase small components, then count what remains.
        const auto fr = oracle::flood_fill(rm, Connectivity::Face);
        Mask3 kept = rm;
        for (std::size_t i = 0; i < kept.size(); ++i)
            if (fr.labels.data[i] > 0 && fr.sizes[fr.labels.data[i] - 1] < s)
                kept.data[i] = 0;
        CHECK(count_components(rm, Connectivity::Face, s) ==
              oracle::flood_count(kept, Connectivity::Face));
    }
}

TEST_CASE("component count is invariant under axis flips") {
    Rng rng(make_rng(21, Stream::Aux).next_u64());
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = random_mask(rng, 5, 6, 7, 0.3);
        for (auto conn : {Connectivity::Face, Connectivity::FaceDiagonal}) {
            const int base = label_components(m, conn).count;
            for (int axis = 0; axis < 3; ++axis) {
                Mask3 f(m.depth, m.height, m.width);
                for (int d = 0; d < m.depth; ++d)
                    for (int h = 0; h < m.height; ++h)
                        for (int w = 0; w < m.width; ++w) {
                            const int fd = axis == 0 ? m.depth - 1 - d : d;
                            const int fh = axis == 1 ? m.height - 1 - h : h;
                            const int fw = axis == 2 ? m.width - 1 - w : w;
                            f.at(fd, fh, fw) = m.at(d, h, w);
                        }
                CHECK(label_components(f, conn).count == base);
            }
        }
    }
}

TEST_CASE("adding voxels bounds count growth; removing a component drops it by one") {
    Rng rng(make_rng(34, Stream::Aux).next_u64());
    for (int trial = 0; trial < 20; ++trial) {
        auto m = random_mask(rng, 3, 6, 6, 0.25);
        const int before = label_components(m, Connectivity::Face).count;

        auto grown = m;
        int added = 0;
        for (int i = 0; i < 5; ++i) {
            const auto idx = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(m.size()) - 1));
            if (!grown.data[idx]) {
                grown.data[idx] = 1;
                ++added;
            }
        }
        CHECK(label_components(grown, Connectivity::Face).count <= before + added);

        if (before > 0) {
            const auto cm = label_components(m, Connectivity::Face);
            const std::int32_t victim =
                static_cast<std::int32_t>(rng.uniform_int(1, cm.count));
            for (std::size_t i = 0; i < m.size(); ++i)
                if (cm.labels.data[i] == victim) m.data[i] = 0;
            CHECK(label_components(m, Connectivity::Face).count == before - 1);
        }
    }
}

TEST_CASE("count_components_slice matches 3D counting on a depth-1 grid") {
    Rng rng(make_rng(55, Stream::Aux).next_u64());
    const auto m = random_mask(rng, 1, 9, 9, 0.4);
    CHECK(count_components_slice(m.slice(0), 9, 9, Connectivity::FaceDiagonal, 2) ==
          count_components(m, Connectivity::FaceDiagonal, 2));
}
