#include "fedia/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedia/ccl.hpp"
#include "fedia/errors.hpp"

namespace fedia {

namespace {

constexpr double kLesionContrast = 0.5;
constexpr int kPlacementAttempts = 200;

struct Ellipsoid {
    int cd, ch, cw;
    double rd, rh, rw;

    bool contains(int d, int h, int w) const {
        double s = 0.0;
        if (rd <= 0.0) {
            if (d != cd) return false;
        } else {
            s += square((d - cd) / rd);
        }
        s += square((h - ch) / rh);
        s += square((w - cw) / rw);
        return s <= 1.0;
    }

    static double square(double x) { return x * x; }
};

// True if painting the ellipsoid would touch existing foreground under
// 26-connectivity (1-voxel Chebyshev gap keeps components disjoint under
// either supported connectivity).
bool touches_foreground(const Mask3& gt, const Ellipsoid& e) {
    const int d0 = std::max(0, e.cd - static_cast<int>(std::ceil(e.rd)) - 1);
    const int d1 = std::min(gt.depth - 1, e.cd + static_cast<int>(std::ceil(e.rd)) + 1);
    const int h0 = std::max(0, e.ch - static_cast<int>(std::ceil(e.rh)) - 1);
    const int h1 = std::min(gt.height - 1, e.ch + static_cast<int>(std::ceil(e.rh)) + 1);
    const int w0 = std::max(0, e.cw - static_cast<int>(std::ceil(e.rw)) - 1);
    const int w1 = std::min(gt.width - 1, e.cw + static_cast<int>(std::ceil(e.rw)) + 1);
    for (int d = d0; d <= d1; ++d)
        for (int h = h0; h <= h1; ++h)
            for (int w = w0; w <= w1; ++w) {
                if (!e.contains(d, h, w)) continue;
                for (int dd = -1; dd <= 1; ++dd)
                    for (int dh = -1; dh <= 1; ++dh)
                        for (int dw = -1; dw <= 1; ++dw) {
                            const int nd = d + dd, nh = h + dh, nw = w + dw;
                            if (gt.in_bounds(nd, nh, nw) && gt.at(nd, nh, nw)) return true;
                        }
            }
    return false;
}

std::size_t paint(Mask3& gt, const Ellipsoid& e) {
    std::size_t painted = 0;
    const int d0 = std::max(0, e.cd - static_cast<int>(std::ceil(e.rd)));
    const int d1 = std::min(gt.depth - 1, e.cd + static_cast<int>(std::ceil(e.rd)));
    const int h0 = std::max(0, e.ch - static_cast<int>(std::ceil(e.rh)));
    const int h1 = std::min(gt.height - 1, e.ch + static_cast<int>(std::ceil(e.rh)));
    const int w0 = std::max(0, e.cw - static_cast<int>(std::ceil(e.rw)));
    const int w1 = std::min(gt.width - 1, e.cw + static_cast<int>(std::ceil(e.rw)));
    for (int d = d0; d <= d1; ++d)
        for (int h = h0; h <= h1; ++h)
            for (int w = w0; w <= w1; ++w)
                if (e.contains(d, h, w)) {
                    gt.at(d, h, w) = 1;
                    ++painted;
                }
    return painted;
}

int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

}  // namespace

void VolumeSpec::validate() const {
    if (depth < 1 || height < 1 || width < 1) throw ConfigError("volume dimensions must be >= 1");
    if (lesion_count_min < 1 || lesion_count_min > lesion_count_max)
        throw ConfigError("lesion_count range invalid");
    if (lesion_radius_min <= 0.0 || lesion_radius_min > lesion_radius_max)
        throw ConfigError("lesion_radius range invalid");
    if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
    if (background_level < 0.0 || background_level > 1.0)
        throw ConfigError("background_level must be in [0, 1]");
    // In-plane fit; the depth semi-axis is clamped to the volume. Integer
    // voxel offsets reach floor(radius), so that is the required margin.
    const int span = 2 * static_cast<int>(std::floor(lesion_radius_max)) + 1;
    if (span > height || span > width)
        throw ConfigError("lesion_radius_max " + std::to_string(lesion_radius_max) +
                          " does not fit a " + std::to_string(height) + "x" +
                          std::to_string(width) + " slice");
}

LabeledVolume generate_volume(const VolumeSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);

    LabeledVolume vol;
    vol.gt_mask = Mask3(spec.depth, spec.height, spec.width, 0);

    const int lesions = static_cast<int>(
        rng.uniform_int(spec.lesion_count_min, spec.lesion_count_max));
    for (int i = 0; i < lesions; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
            Ellipsoid e;
            e.rh = rng.uniform(spec.lesion_radius_min, spec.lesion_radius_max);
            e.rw = rng.uniform(spec.lesion_radius_min, spec.lesion_radius_max);
            e.rd = std::min(rng.uniform(spec.lesion_radius_min, spec.lesion_radius_max),
                            (spec.depth - 1) / 2.0);
            const int md = static_cast<int>(std::floor(e.rd));
            const int mh = static_cast<int>(std::floor(e.rh));
            const int mw = static_cast<int>(std::floor(e.rw));
            e.cd = static_cast<int>(rng.uniform_int(md, spec.depth - 1 - md));
            e.ch = static_cast<int>(rng.uniform_int(mh, spec.height - 1 - mh));
            e.cw = static_cast<int>(rng.uniform_int(mw, spec.width - 1 - mw));
            if (touches_foreground(vol.gt_mask, e)) continue;
            paint(vol.gt_mask, e);
            placed = true;
        }
        if (!placed)
            throw GenerationError("could not place lesion " + std::to_string(i + 1) + " of " +
                                  std::to_string(lesions) + " after " +
                                  std::to_string(kPlacementAttempts) + " attempts");
    }
    vol.gt_component_count = lesions;
    vol.kept_component_count = lesions;

    vol.image = Image3(spec.depth, spec.height, spec.width, 0.0f);
    for (std::size_t i = 0; i < vol.image.size(); ++i) {
        double v = spec.background_level + (vol.gt_mask.data[i] ? kLesionContrast : 0.0);
        v += rng.normal(0.0, spec.noise_sigma);
        vol.image.data[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }

    vol.noisy_mask = vol.gt_mask;
    vol.working_mask = vol.gt_mask;
    return vol;
}

LabeledVolume corrupt_annotations(LabeledVolume vol, double a_k, Rng& rng) {
    if (!(a_k > 0.0) || a_k > 1.0 + 1e-9)
        throw ConfigError("completeness rate must be in (0, 1], got " + std::to_string(a_k));
    if (vol.noisy_mask != vol.gt_mask)
        throw RunError("corrupt_annotations requires an uncorrupted volume");

    const ComponentMap cm = label_components(vol.gt_mask, Connectivity::Face);
    const int total = cm.count;
    if (total == 0) {
        vol.kept_component_count = 0;
        return vol;
    }
    const int kept = std::clamp(round_half_up(total * a_k), 1, total);

    std::vector<int> ids(total);
    std::iota(ids.begin(), ids.end(), 1);
    rng.shuffle(ids);
    std::vector<std::uint8_t> keep(total + 1, 0);
    for (int i = 0; i < kept; ++i) keep[ids[i]] = 1;

    for (std::size_t i = 0; i < vol.noisy_mask.size(); ++i) {
        const std::int32_t lbl = cm.labels.data[i];
        if (lbl > 0 && !keep[lbl]) vol.noisy_mask.data[i] = 0;
    }
    vol.working_mask = vol.noisy_mask;
    vol.kept_component_count = kept;
    return vol;
}

std::vector<double> completeness_schedule(DatasetKind kind, int m, int clients) {
    if (clients < 1) throw ConfigError("client count must be >= 1");
    std::vector<double> rates(clients);
    for (int k = 0; k < clients; ++k) {
        const double a = kind == DatasetKind::MsLike ? 0.2 * k - 0.1 * m + 0.4
                                                     : 0.1 * k - 0.3 * m + 0.7;
        if (a <= 1e-9 || a > 1.0 + 1e-9)
            throw ConfigError("completeness schedule yields a_" + std::to_string(k) + " = " +
                              std::to_string(a) + ", outside (0, 1]");
        rates[k] = std::min(a, 1.0);
    }
    return rates;
}

FederatedDataset build_federation(const FederationSpec& spec, std::uint64_t master_seed) {
    spec.volume.validate();
    if (spec.volumes_per_client < 1)
        throw ConfigError("volumes_per_client must be >= 1 (fewer volumes than clients)");
    if (spec.test_fraction < 0.0 || spec.test_fraction >= 1.0)
        throw ConfigError("test_fraction must be in [0, 1)");
    const auto rates = completeness_schedule(spec.kind, spec.m, spec.clients);

    const int n_train = spec.clients * spec.volumes_per_client;
    const int n_test =
        spec.test_fraction > 0.0
            ? std::max<int>(1, static_cast<int>(std::llround(
                                   n_train * spec.test_fraction / (1.0 - spec.test_fraction))))
            : 0;
    const int n_total = n_train + n_test;

    std::vector<LabeledVolume> volumes;
    volumes.reserve(n_total);
    for (int i = 0; i < n_total; ++i)
        volumes.push_back(
            generate_volume(spec.volume, derive_seed(master_seed, Stream::DataGen, i)));

    std::vector<int> order(n_total);
    std::iota(order.begin(), order.end(), 0);
    Rng part_rng = make_rng(master_seed, Stream::Partition);
    part_rng.shuffle(order);

    FederatedDataset ds;
    ds.completeness = rates;
    for (int i = 0; i < n_test; ++i) ds.test_set.push_back(std::move(volumes[order[i]]));
    ds.clients.resize(spec.clients);
    int next = n_test;
    for (int k = 0; k < spec.clients; ++k) {
        ds.clients[k].reserve(spec.volumes_per_client);
        for (int j = 0; j < spec.volumes_per_client; ++j) {
            const int idx = order[next++];
            Rng corrupt_rng = make_rng(master_seed, Stream::Corrupt, idx);
            ds.clients[k].push_back(
                corrupt_annotations(std::move(volumes[idx]), rates[k], corrupt_rng));
        }
    }
    return ds;
}

}  // namespace fedia
