#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "fedia/metrics.hpp"
#include "fedia/rng.hpp"
#include "fedia/synth.hpp"
#include "oracles.hpp"

using namespace fedia;
using doctest::Approx;

namespace {

Mask3 random_mask(Rng& rng, int d, int h, int w, double fill) {
    Mask3 m(d, h, w);
    for (auto& v : m.data) v = rng.uniform() < fill ? 1 : 0;
    return m;
}

std::vector<LabeledVolume> small_test_set(int volumes, std::uint64_t seed) {
    VolumeSpec spec;
    spec.depth = 4;
    spec.height = 16;
    spec.width = 16;
    spec.lesion_count_min = 1;
    spec.lesion_count_max = 3;
    spec.lesion_radius_min = 1.2;
    spec.lesion_radius_max = 2.0;
    std::vector<LabeledVolume> out;
    for (int i = 0; i < volumes; ++i)
        out.push_back(generate_volume(spec, derive_seed(seed, Stream::DataGen, i)));
    return out;
}

// Probabilities equal to the clean mask.
Predictor gt_oracle_predictor(const std::vector<LabeledVolume>& test) {
    return [&test](std::span<const float> image, std::span<double> probs) {
        for (const auto& vol : test) {
            for (int d = 0; d < vol.image.depth; ++d) {
                const auto s = vol.image.slice(d);
                if (s.data() != image.data()) continue;
                const auto gt = vol.gt_mask.slice(d);
                for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = gt[i] ? 1.0 : 0.0;
                return;
            }
        }
        std::fill(probs.begin(), probs.end(), 0.0);
    };
}

}  // namespace

TEST_CASE("dice hand values") {
    Mask3 a(1, 4, 4), b(1, 4, 4);
    CHECK(dice_coeff(a, b) == Approx(1.0));  // empty-empty is a success
    a.at(0, 0, 0) = 1;
    CHECK(dice_coeff(a, b) == Approx(0.0));  // disjoint

    // |P| = 3, |G| = 5, overlap 2 -> 4/8.
    Mask3 p(1, 4, 4), g(1, 4, 4);
    p.at(0, 0, 0) = p.at(0, 0, 1) = p.at(0, 0, 2) = 1;
    g.at(0, 0, 1) = g.at(0, 0, 2) = g.at(0, 1, 0) = g.at(0, 1, 1) = g.at(0, 1, 2) = 1;
    CHECK(dice_coeff(p, g) == Approx(0.5));
    CHECK(dice_coeff(g, p) == Approx(0.5));  // symmetric
}

TEST_CASE("dice against a pixel-count oracle on random masks") {
    Rng rng(make_rng(31, Stream::Aux).next_u64());
    for (int trial = 0; trial < 50; ++trial) {
        const auto p = random_mask(rng, 2, 6, 6, 0.4);
        const auto g = random_mask(rng, 2, 6, 6, 0.4);
        std::size_t inter = 0, np = 0, ng = 0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            inter += (p.data[i] && g.data[i]);
            np += p.data[i];
            ng += g.data[i];
        }
        const double expect = (np + ng) == 0 ? 1.0 : 2.0 * inter / double(np + ng);
        CHECK(dice_coeff(p, g) == Approx(expect).epsilon(1e-12));
        CHECK(dice_coeff(p, g) <= 1.0);
        if (np + ng > 0 && p.data == g.data) CHECK(dice_coeff(p, g) == Approx(1.0));
    }
}

TEST_CASE("mask_iou basics") {
    Mask3 a(1, 3, 3), b(1, 3, 3);
    CHECK(mask_iou(a, b) == Approx(1.0));
    a.at(0, 0, 0) = 1;
    b.at(0, 0, 0) = 1;
    b.at(0, 2, 2) = 1;
    CHECK(mask_iou(a, b) == Approx(0.5));
}

TEST_CASE("lesion recall counts touched components") {
    // Four separated blobs; prediction touches three.
    Mask3 g(1, 10, 10);
    g.at(0, 0, 0) = 1;
    g.at(0, 0, 5) = 1;
    g.at(0, 5, 0) = 1;
    g.at(0, 5, 5) = 1;
    Mask3 p(1, 10, 10);
    p.at(0, 0, 0) = 1;
    p.at(0, 0, 5) = 1;
    p.at(0, 5, 0) = 1;
    CHECK(lesion_recall(p, g) == Approx(0.75));

    Mask3 all = g;
    CHECK(lesion_recall(all, g) == Approx(1.0));
    Mask3 none(1, 10, 10);
    CHECK(lesion_recall(none, g) == Approx(0.0));
    CHECK(lesion_recall(none, none) == Approx(1.0));  // empty gt convention
}

TEST_CASE("evaluate with a ground-truth oracle predictor is perfect") {
    const auto test = small_test_set(3, 17);
    const auto report = evaluate(gt_oracle_predictor(test), test);
    CHECK(report.mean_dice == Approx(1.0));
    CHECK(report.mean_iou == Approx(1.0));
    CHECK(report.mean_lesion_recall == Approx(1.0));
    REQUIRE(report.per_volume.size() == 3);
}

TEST_CASE("constant 0.5 output binarizes to all background (strict threshold)") {
    const auto test = small_test_set(2, 18);
    Predictor half = [](std::span<const float>, std::span<double> probs) {
        std::fill(probs.begin(), probs.end(), 0.5);
    };
    Predictor zero = [](std::span<const float>, std::span<double> probs) {
        std::fill(probs.begin(), probs.end(), 0.0);
    };
    const auto rh = evaluate(half, test);
    const auto rz = evaluate(zero, test);
    CHECK(rh.mean_dice == Approx(rz.mean_dice));
    CHECK(rh.mean_iou == Approx(rz.mean_iou));
    CHECK(rh.mean_lesion_recall == Approx(rz.mean_lesion_recall));
}

TEST_CASE("report means equal the mean of the per-volume breakdown") {
    const auto test = small_test_set(4, 19);
    Predictor noisy = [](std::span<const float> image, std::span<double> probs) {
        for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = image[i] > 0.45 ? 0.9 : 0.1;
    };
    const auto report = evaluate(noisy, test);
    double dice = 0.0, iou = 0.0, recall = 0.0;
    for (const auto& ve : report.per_volume) {
        dice += ve.dice;
        iou += ve.iou;
        recall += ve.lesion_recall;
    }
    const double n = static_cast<double>(report.per_volume.size());
    CHECK(report.mean_dice == Approx(dice / n).epsilon(1e-12));
    CHECK(report.mean_iou == Approx(iou / n).epsilon(1e-12));
    CHECK(report.mean_lesion_recall == Approx(recall / n).epsilon(1e-12));
}

TEST_CASE("evaluate is invariant to test-set order") {
    auto test = small_test_set(5, 20);
    Predictor noisy = [](std::span<const float> image, std::span<double> probs) {
        for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = image[i] > 0.5 ? 0.8 : 0.2;
    };
    const auto before = evaluate(noisy, test);
    std::reverse(test.begin(), test.end());
    const auto after = evaluate(noisy, test);
    CHECK(before.mean_dice == Approx(after.mean_dice).epsilon(1e-12));
    CHECK(before.mean_iou == Approx(after.mean_iou).epsilon(1e-12));
    CHECK(before.mean_lesion_recall == Approx(after.mean_lesion_recall).epsilon(1e-12));
}

TEST_CASE("pooled granularity pools voxel counts") {
    const auto test = small_test_set(3, 21);
    Predictor zero = [](std::span<const float>, std::span<double> probs) {
        std::fill(probs.begin(), probs.end(), 0.0);
    };
    const auto pooled = evaluate(zero, test, 0.5, EvalGranularity::Pooled);
    // All-empty prediction vs nonempty gt: pooled dice is exactly 0.
    CHECK(pooled.mean_dice == Approx(0.0));
}
