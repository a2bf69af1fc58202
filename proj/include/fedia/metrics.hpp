#pragma once

#include <functional>
#include <span>
#include <vector>

#include "fedia/ccl.hpp"
#include "fedia/grid.hpp"
#include "fedia/model.hpp"
#include "fedia/synth.hpp"

namespace fedia {

struct VolumeEval {
    double dice = 0.0;
    double iou = 0.0;
    double lesion_recall = 0.0;
};

struct EvalReport {
    double mean_dice = 0.0;
    double mean_iou = 0.0;
    double mean_lesion_recall = 0.0;
    std::vector<VolumeEval> per_volume;
};

// 2|P & G| / (|P| + |G|); both masks empty counts as a perfect 1.0.
double dice_coeff(const Mask3& pred, const Mask3& gt);

// |P & G| / (P | G|); both empty -> 1.0.
double mask_iou(const Mask3& pred, const Mask3& gt);

// Fraction of gt components touched by at least one predicted voxel;
// empty gt -> 1.0 by convention.
double lesion_recall(const Mask3& pred, const Mask3& gt,
                     Connectivity conn = Connectivity::Face);

enum class EvalGranularity { PerVolume, Pooled };

// Produces per-pixel probabilities for one slice.
using Predictor = std::function<void(std::span<const float> image, std::span<double> probs)>;

// Thresholds slice predictions at strictly > threshold, reassembles 3D
// masks per volume, and scores them against clean ground truth. Pooled
// granularity computes dice/iou over the concatenated voxels of all
// volumes instead of averaging per-volume values.
EvalReport evaluate(const Predictor& predictor, const std::vector<LabeledVolume>& test_set,
                    double threshold = 0.5,
                    EvalGranularity granularity = EvalGranularity::PerVolume);

EvalReport evaluate(const Network& net, const ModelParams& params,
                    const std::vector<LabeledVolume>& test_set, double threshold = 0.5,
                    EvalGranularity granularity = EvalGranularity::PerVolume);

}  // namespace fedia
