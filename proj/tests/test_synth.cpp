#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "fedia/errors.hpp"
#include "fedia/synth.hpp"
#include "oracles.hpp"

using namespace fedia;

namespace {

VolumeSpec small_spec() {
    VolumeSpec s;
    s.depth = 6;
    s.height = 24;
    s.width = 24;
    s.lesion_count_min = 3;
    s.lesion_count_max = 3;
    s.lesion_radius_min = 1.4;
    s.lesion_radius_max = 2.2;
    return s;
}

}  // namespace

TEST_CASE("single flat blob in a depth-1 volume") {
    VolumeSpec s;
    s.depth = 1;
    s.height = 16;
    s.width = 16;
    s.lesion_count_min = 1;
    s.lesion_count_max = 1;
    s.lesion_radius_min = 2.0;
    s.lesion_radius_max = 2.0;
    const auto vol = generate_volume(s, 7);
    CHECK(vol.gt_component_count == 1);
    CHECK(oracle::flood_count(vol.gt_mask, Connectivity::Face) == 1);
    CHECK(vol.noisy_mask == vol.gt_mask);
    CHECK(vol.working_mask == vol.gt_mask);
}

TEST_CASE("requested lesion count equals flood-fill component count") {
    const auto spec = small_spec();
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 42ull}) {
        const auto vol = generate_volume(spec, seed);
        CHECK(vol.gt_component_count == 3);
        CHECK(oracle::flood_count(vol.gt_mask, Connectivity::Face) == 3);
        // Disjoint under the wider connectivity too (1-voxel gap by construction).
        CHECK(oracle::flood_count(vol.gt_mask, Connectivity::FaceDiagonal) == 3);
    }
}

TEST_CASE("generation is deterministic and image stays in range") {
    const auto spec = small_spec();
    const auto a = generate_volume(spec, 123);
    const auto b = generate_volume(spec, 123);
    CHECK(a.image.data == b.image.data);
    CHECK(a.gt_mask == b.gt_mask);
    for (float v : a.image.data) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
    const auto c = generate_volume(spec, 124);
    CHECK(a.image.data != c.image.data);
}

TEST_CASE("volume too small for the requested lesions fails") {
    VolumeSpec s;
    s.height = 4;
    s.width = 4;
    s.lesion_radius_min = 3.0;
    s.lesion_radius_max = 3.0;
    CHECK_THROWS_AS(generate_volume(s, 1), ConfigError);

    // Fits individually but 40 disjoint blobs cannot be placed.
    VolumeSpec crowded = small_spec();
    crowded.depth = 2;
    crowded.height = 12;
    crowded.width = 12;
    crowded.lesion_count_min = 40;
    crowded.lesion_count_max = 40;
    CHECK_THROWS_AS(generate_volume(crowded, 1), GenerationError);
}

TEST_CASE("corruption keeps round-half-up(c_g * a) components") {
    VolumeSpec ten = small_spec();
    ten.depth = 8;
    ten.height = 40;
    ten.width = 40;
    ten.lesion_count_min = 10;
    ten.lesion_count_max = 10;
    const auto vol = generate_volume(ten, 5);
    REQUIRE(vol.gt_component_count == 10);

    Rng rng(make_rng(5, Stream::Aux).next_u64());
    const auto corrupted = corrupt_annotations(vol, 0.4, rng);
    CHECK(corrupted.kept_component_count == 4);
    CHECK(oracle::flood_count(corrupted.noisy_mask, Connectivity::Face) == 4);
    CHECK(corrupted.gt_component_count == 10);
    CHECK(mask_subset(corrupted.noisy_mask, corrupted.gt_mask));
    CHECK(corrupted.working_mask == corrupted.noisy_mask);
}

TEST_CASE("full completeness leaves the annotation untouched") {
    Rng rng(make_rng(6, Stream::Aux).next_u64());
    const auto vol = generate_volume(small_spec(), 11);
    const auto kept = corrupt_annotations(vol, 1.0, rng);
    CHECK(kept.noisy_mask == kept.gt_mask);
    CHECK(kept.kept_component_count == kept.gt_component_count);
}

TEST_CASE("three components at a=0.5 keep two; erased voxels form one component") {
    const auto vol = generate_volume(small_spec(), 21);
    REQUIRE(vol.gt_component_count == 3);
    Rng rng(make_rng(21, Stream::Aux).next_u64());
    const auto corrupted = corrupt_annotations(vol, 0.5, rng);
    CHECK(corrupted.kept_component_count == 2);  // round-half-up(1.5)

    Mask3 erased = corrupted.gt_mask;
    for (std::size_t i = 0; i < erased.size(); ++i)
        erased.data[i] = corrupted.gt_mask.data[i] && !corrupted.noisy_mask.data[i];
    CHECK(oracle::flood_count(erased, Connectivity::Face) == 1);
}

TEST_CASE("corruption rejects invalid rates and corrupted input") {
    const auto vol = generate_volume(small_spec(), 3);
    Rng rng(make_rng(3, Stream::Aux).next_u64());
    CHECK_THROWS_AS(corrupt_annotations(vol, 0.0, rng), ConfigError);
    CHECK_THROWS_AS(corrupt_annotations(vol, 1.2, rng), ConfigError);
    const auto once = corrupt_annotations(generate_volume(small_spec(), 31), 0.5, rng);
    if (once.noisy_mask != once.gt_mask)
        CHECK_THROWS_AS(corrupt_annotations(once, 0.5, rng), RunError);
}

TEST_CASE("completeness schedules reproduce the published settings") {
    using doctest::Approx;
    struct Row {
        DatasetKind kind;
        int m;
        std::vector<double> expect;
    };
    const std::vector<Row> rows = {
        {DatasetKind::MsLike, 0, {0.4, 0.6, 0.8, 1.0}},
        {DatasetKind::MsLike, 1, {0.3, 0.5, 0.7, 0.9}},
        {DatasetKind::MsLike, 2, {0.2, 0.4, 0.6, 0.8}},
        {DatasetKind::MsLike, 3, {0.1, 0.3, 0.5, 0.7}},
        {DatasetKind::LungLike, 0, {0.7, 0.8, 0.9, 1.0}},
        {DatasetKind::LungLike, 1, {0.4, 0.5, 0.6, 0.7}},
        {DatasetKind::LungLike, 2, {0.1, 0.2, 0.3, 0.4}},
    };
    for (const auto& row : rows) {
        const auto rates = completeness_schedule(row.kind, row.m, 4);
        REQUIRE(rates.size() == 4);
        for (int k = 0; k < 4; ++k) CHECK(rates[k] == Approx(row.expect[k]).epsilon(1e-12));
    }
}

TEST_CASE("schedules outside (0,1] are rejected") {
    CHECK_THROWS_AS(completeness_schedule(DatasetKind::MsLike, 4, 4), ConfigError);
    CHECK_THROWS_AS(completeness_schedule(DatasetKind::MsLike, 0, 5), ConfigError);
    CHECK_THROWS_AS(completeness_schedule(DatasetKind::LungLike, 3, 4), ConfigError);
}

TEST_CASE("federation split: 16 train + 4 test from vpc=4, K=4, tf=0.2") {
    FederationSpec fs;
    fs.volume = small_spec();
    fs.kind = DatasetKind::MsLike;
    fs.m = 0;
    fs.clients = 4;
    fs.volumes_per_client = 4;
    fs.test_fraction = 0.2;
    const auto ds = build_federation(fs, 2024);
    CHECK(ds.test_set.size() == 4);
    REQUIRE(ds.clients.size() == 4);
    for (const auto& c : ds.clients) CHECK(c.size() == 4);

    // Client with a_k = 1.0 is uncorrupted; test volumes always are.
    for (const auto& vol : ds.clients[3]) CHECK(vol.noisy_mask == vol.gt_mask);
    for (const auto& vol : ds.test_set) CHECK(vol.noisy_mask == vol.gt_mask);

    // Corruption only removes foreground.
    for (const auto& client : ds.clients)
        for (const auto& vol : client) CHECK(mask_subset(vol.noisy_mask, vol.gt_mask));
}

TEST_CASE("federation build is deterministic") {
    FederationSpec fs;
    fs.volume = small_spec();
    fs.m = 2;
    const auto a = build_federation(fs, 77);
    const auto b = build_federation(fs, 77);
    REQUIRE(a.clients.size() == b.clients.size());
    for (std::size_t k = 0; k < a.clients.size(); ++k)
        for (std::size_t j = 0; j < a.clients[k].size(); ++j) {
            CHECK(a.clients[k][j].image.data == b.clients[k][j].image.data);
            CHECK(a.clients[k][j].noisy_mask == b.clients[k][j].noisy_mask);
        }
}

TEST_CASE("achieved per-client completeness tracks the schedule") {
    FederationSpec fs;
    fs.volume.depth = 8;
    fs.volume.height = 40;
    fs.volume.width = 40;
    fs.volume.lesion_count_min = 5;
    fs.volume.lesion_count_max = 7;
    fs.kind = DatasetKind::MsLike;
    fs.m = 2;  // a = [0.2, 0.4, 0.6, 0.8]
    fs.volumes_per_client = 5;
    const auto ds = build_federation(fs, 99);
    for (std::size_t k = 0; k < ds.clients.size(); ++k) {
        std::size_t kept = 0, total = 0;
        for (const auto& vol : ds.clients[k]) {
            kept += oracle::flood_count(vol.noisy_mask, Connectivity::Face);
            total += oracle::flood_count(vol.gt_mask, Connectivity::Face);
        }
        const double achieved = static_cast<double>(kept) / static_cast<double>(total);
        CHECK(std::abs(achieved - ds.completeness[k]) <= 0.1);
    }
}

TEST_CASE("zero volumes per client is rejected") {
    FederationSpec fs;
    fs.volume = small_spec();
    fs.volumes_per_client = 0;
    CHECK_THROWS_AS(build_federation(fs, 1), ConfigError);
}
