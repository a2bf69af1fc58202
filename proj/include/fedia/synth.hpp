#pragma once

#include <cstdint>
#include <vector>

#include "fedia/grid.hpp"
#include "fedia/rng.hpp"

namespace fedia {

// Shape and texture of one synthetic multi-lesion volume. Lesions are
// pairwise-disjoint ellipsoidal blobs with a fixed +0.5 intensity
// contrast over the background, so the true lesion count is exact.
struct VolumeSpec {
    int depth = 8;
    int height = 32;
    int width = 32;
    int lesion_count_min = 3;
    int lesion_count_max = 6;
    double lesion_radius_min = 1.4;   // voxels, in-plane semi-axes
    double lesion_radius_max = 2.6;
    double noise_sigma = 0.05;        // additive Gaussian, intensity units
    double background_level = 0.2;

    void validate() const;  // throws ConfigError
};

// One image/annotation pair. gt_mask is the clean truth; noisy_mask is
// the incomplete annotation (whole lesions removed); working_mask is the
// training target, mutated only by 0->1 correction.
struct LabeledVolume {
    Image3 image;
    Mask3 gt_mask;
    Mask3 noisy_mask;
    Mask3 working_mask;
    int gt_component_count = 0;    // c_g
    int kept_component_count = 0;  // c_n
};

enum class DatasetKind { MsLike, LungLike };

struct FederatedDataset {
    std::vector<std::vector<LabeledVolume>> clients;
    std::vector<double> completeness;     // scheduled a_k per client
    std::vector<LabeledVolume> test_set;  // uncorrupted
};

// Federation shape for dataset construction.
struct FederationSpec {
    VolumeSpec volume;
    DatasetKind kind = DatasetKind::MsLike;
    int m = 0;
    int clients = 4;
    int volumes_per_client = 4;
    double test_fraction = 0.2;
};

// Generates one uncorrupted volume (noisy_mask == gt_mask). Deterministic
// given the seed. Throws GenerationError if lesion placement cannot
// satisfy disjointness within bounded retries.
LabeledVolume generate_volume(const VolumeSpec& spec, std::uint64_t seed);

// Removes whole lesions at the 3D level: keeps round-half-up(c_g * a_k)
// components (at least 1), chosen uniformly; everything else becomes
// background in noisy_mask. working_mask is reset to noisy_mask.
// Requires an uncorrupted volume and a_k in (0, 1].
LabeledVolume corrupt_annotations(LabeledVolume vol, double a_k, Rng& rng);

// Per-client completeness rates a_k, k = 0..K-1:
//   MS-like:   a_k = 0.2*k - 0.1*m + 0.4
//   LUNG-like: a_k = 0.1*k - 0.3*m + 0.7
// Throws ConfigError if any rate falls outside (0, 1].
std::vector<double> completeness_schedule(DatasetKind kind, int m, int clients);

// Generates clients*volumes_per_client training volumes plus an
// uncorrupted test set sized by test_fraction, deals training volumes
// uniformly at random across clients, and corrupts each client's volumes
// at its scheduled rate. Deterministic given the master seed.
FederatedDataset build_federation(const FederationSpec& spec, std::uint64_t master_seed);

}  // namespace fedia
