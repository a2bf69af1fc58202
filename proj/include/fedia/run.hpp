#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fedia/config.hpp"
#include "fedia/fed.hpp"
#include "fedia/fedia.hpp"
#include "fedia/metrics.hpp"

namespace fedia {

struct ClientReport {
    int id = 0;
    double a_true = 1.0;
    double a_hat_raw = -1.0;
    double a_hat = -1.0;
    long label_components = 0;
    long predicted_components = 0;
    bool warned = false;
};

struct RunResult {
    std::string id;
    RunConfig config;
    std::vector<RoundRecord> records;
    ModelParams final_params;
    std::vector<ClientReport> estimation;
    std::vector<CorrectionEvent> corrections;
    EvalReport final_eval;
    int first_modification_round = -1;
    int first_final_round = -1;
    double last_window_dice = 0.0;  // mean test dice over the last window
};

// Mean test_dice over evaluated rounds in the last `window` rounds.
double last_window_mean_dice(const std::vector<RoundRecord>& records, int window);

// Mutable training state at a round boundary; everything else about a run
// is reproducible from (config, seed).
struct RunSnapshot {
    int next_round = 1;
    ModelParams global;
    struct ClientSnap {
        std::vector<Mask3> working_masks;
        std::vector<double> loss_history;
        std::vector<double> iou_history;
        double a_hat_raw = -1.0;
        double a_hat = -1.0;
        bool a_hat_warned = false;
        long label_components = 0;
        long predicted_components = 0;
        std::optional<TrendFit> trend;
        std::vector<int> correction_rounds;
        bool correction_pending = false;
    };
    std::vector<ClientSnap> clients;
};

void save_snapshot(const RunSnapshot& snap, const std::string& dir);
RunSnapshot load_snapshot(const std::string& dir);

// One seeded federated run, stepped a round at a time:
//   warm-up      quantity-weighted rounds 1..T, per-round client IoU;
//                completeness estimates and IoU trends at round T
//   modification completeness-aware weights; trend-gap triggers schedule
//                confidence-gated 0->1 annotation correction for the
//                next round
//   final        back to quantity-weighted aggregation on the corrected
//                annotations
// The plain fedavg method skips estimation, re-weighting and correction;
// the no_acag/no_cac methods drop one mechanism each.
class FederationRun {
  public:
    explicit FederationRun(const RunConfig& cfg);

    int next_round() const { return next_round_; }
    bool done() const { return next_round_ > cfg_.total_rounds; }
    void step();

    RunResult result() const;

    RunSnapshot snapshot() const;
    void restore(const RunSnapshot& snap);

    const Network& network() const { return net_; }
    const ModelParams& global() const { return global_; }
    const std::vector<ClientState>& clients() const { return clients_; }
    const std::vector<LabeledVolume>& test_set() const { return test_; }

  private:
    Stage stage_for(int round) const;
    bool uses_acag() const { return cfg_.method == Method::FedIA || cfg_.method == Method::FedIANoCac; }
    bool uses_cac() const { return cfg_.method == Method::FedIA || cfg_.method == Method::FedIANoAcag; }
    bool uses_estimation() const { return cfg_.method != Method::FedAvg; }

    RunConfig cfg_;
    Network net_;
    std::vector<ClientState> clients_;
    std::vector<LabeledVolume> test_;
    ModelParams global_;
    int next_round_ = 1;

    std::vector<RoundRecord> records_;
    std::vector<CorrectionEvent> corrections_;
    EvalReport last_eval_;
    bool evaluated_once_ = false;
    int first_modification_round_ = -1;
    int first_final_round_ = -1;
};

RunResult run_federation(const RunConfig& cfg);

}  // namespace fedia
