#pragma once

#include <span>
#include <vector>

#include "fedia/fed.hpp"
#include "fedia/model.hpp"

namespace fedia {

// Knobs of the completeness-aware strategy.
struct FedIAConfig {
    int warmup_rounds = 10;  // T
    double lambda = 0.03;    // trigger margin on the IoU trend gap
    double confidence = 0.8; // probability gate for 0->1 correction
    std::size_t min_component_size = 3;  // speckle filter on predicted maps

    enum class AcagMode { UntilAllCorrected, Always, Rounds };
    AcagMode acag_mode = AcagMode::UntilAllCorrected;
    int acag_rounds = 0;  // Rounds mode: modification stage length

    int total_rounds = 300;
    bool per_volume_components = false;  // count estimation components in 3D volumes
    bool acag_in_final = false;          // keep completeness-aware weights in the final stage

    void validate() const;  // throws ConfigError
};

struct EstimationResult {
    double raw = 1.0;      // label components / predicted components
    double clamped = 1.0;  // raw clamped into (0, 1] for weighting
    long label_components = 0;
    long predicted_components = 0;
    bool warned = false;  // no predicted components; estimate defaulted to 1
};

// Completeness counted from already-binarized prediction masks, one per
// slice in client volume/depth order. Exposed for oracle-driven tests.
EstimationResult completeness_from_predictions(const ClientState& client,
                                               const std::vector<Mask3>& predicted,
                                               const FedIAConfig& cfg);

// Ratio of annotated components to components found by the warm-up model
// (thresholded at 0.5, speckles below min_component_size dropped).
// Stores the result on the client and returns it.
EstimationResult estimate_completeness(ClientState& client, const Network& net,
                                       const ModelParams& warmup_global, const FedIAConfig& cfg);

// Softmax over a_hat_k / max(loss_k, 1e-6), max-subtracted; sums to 1.
std::vector<double> acag_weights(std::span<const double> a_hat, std::span<const double> losses);

// Ordinary least squares line over (t, iou[t-1]) for t = 1..n.
TrendFit fit_iou_trend(std::span<const double> iou_history);

// True iff the fitted trend at round t exceeds the observed IoU by more
// than lambda (strict).
bool correction_due(const TrendFit& fit, int round, double actual_iou, double lambda);

struct CorrectionEvent {
    int round = 0;
    int client = 0;
    std::size_t flipped = 0;
    std::size_t flipped_in_gt = 0;  // simulator-side soundness bookkeeping
};

// Flips working_mask zeros to one wherever the model probability exceeds
// the confidence gate. Annotated pixels are never modified, so working
// masks only ever grow. Returns flip counts; round is left to the caller.
CorrectionEvent correct_annotations(ClientState& client, const Network& net,
                                    const ModelParams& global, double confidence);

}  // namespace fedia
