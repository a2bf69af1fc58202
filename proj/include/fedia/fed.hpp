#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fedia/model.hpp"
#include "fedia/synth.hpp"

namespace fedia {

// First-order IoU trend fitted over the warm-up rounds.
struct TrendFit {
    double slope = 0.0;      // l_k, IoU per round
    double intercept = 0.0;  // b_k
    int fit_rounds = 0;      // number of points used

    double at(int round) const { return slope * round + intercept; }
};

// One client's private state. Training targets come from working_mask;
// noisy_mask keeps the original incomplete annotation for estimation.
struct ClientState {
    int id = 0;
    std::vector<LabeledVolume> volumes;
    double true_completeness = 1.0;  // a_k, simulator-side only

    std::vector<double> loss_history;  // avg loss per participated round
    std::vector<double> iou_history;   // IoU against working_mask per round
    double a_hat_raw = -1.0;           // estimate before clamping, < 0 = unset
    double a_hat = -1.0;               // clamped to (0, 1], < 0 = unset
    bool a_hat_warned = false;         // denominator guard fired
    long label_components = 0;         // estimation numerator
    long predicted_components = 0;     // estimation denominator
    std::optional<TrendFit> trend;
    std::vector<int> correction_rounds;
    bool correction_pending = false;

    int slice_count() const {
        int n = 0;
        for (const auto& v : volumes) n += v.image.depth;
        return n;
    }
};

ClientState make_client(int id, std::vector<LabeledVolume> volumes, double true_completeness);

enum class Stage { Warmup, Modification, Final };

const char* stage_name(Stage stage);

// Per-round log used by all downstream reporting. Weights sum to 1
// within 1e-9 over participating clients.
struct RoundRecord {
    int round = 0;  // t, 1-based
    Stage stage = Stage::Warmup;
    std::vector<double> weights;
    std::vector<double> losses;  // NaN for clients that aborted the round
    std::vector<double> ious;
    std::vector<int> corrected;  // client ids whose annotations were corrected this round
    double test_dice = std::numeric_limits<double>::quiet_NaN();  // NaN = not evaluated

    friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct TrainOptions {
    int epochs = 1;
    int batch_size = 4;
    double lr = 1e-3;
    std::uint64_t master_seed = 1;
};

struct LocalTrainResult {
    ModelParams params;
    double avg_loss = 0.0;
    bool ok = true;
    std::string error;
};

// Loads the global parameters and runs `epochs` seeded-shuffled passes of
// minibatch Adam against working_mask; the batch loss is the mean of the
// per-image Dice losses. Returns the epoch-mean per-image loss (of the
// final epoch) and appends it to loss_history. epochs == 0 evaluates the
// loss without updating. Non-finite losses mark the result not-ok and
// leave histories untouched.
LocalTrainResult local_train(ClientState& client, const Network& net, const ModelParams& global,
                             int round, const TrainOptions& opts);

// Quantity-weighted FedAvg: params_interp with weights n_k / sum(n).
ModelParams fedavg_aggregate(const std::vector<ModelParams>& params,
                             const std::vector<int>& counts);

// IoU of one binarized probability map against a target slice; both
// empty -> 1.0.
double slice_iou(std::span<const double> probs, std::span<const std::uint8_t> target,
                 double threshold);

// Mean working-mask IoU over the client's slices under the given model;
// appends to iou_history.
double client_iou(ClientState& client, const Network& net, const ModelParams& global,
                  double threshold = 0.5);

// One synchronous round with externally fixed aggregation weights: every
// client trains from the same incoming global, weights are renormalized
// over the clients that completed, and the result is aggregated in fixed
// client order. Throws RunError if every client aborts.
struct RoundOutcome {
    ModelParams global;
    RoundRecord record;
};

RoundOutcome run_round(std::vector<ClientState>& clients, const Network& net,
                       const ModelParams& global, std::span<const double> weights, int round,
                       const TrainOptions& opts);

}  // namespace fedia
