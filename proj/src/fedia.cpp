#include "fedia/fedia.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedia/ccl.hpp"
#include "fedia/errors.hpp"

namespace fedia {

namespace {
constexpr double kLossFloor = 1e-6;
constexpr double kAhatFloor = 1e-6;
constexpr double kPredictionThreshold = 0.5;
}  // namespace

void FedIAConfig::validate() const {
    if (warmup_rounds < 1) throw ConfigError("warmup_rounds must be >= 1");
    if (warmup_rounds >= total_rounds)
        throw ConfigError("warmup_rounds must be < total_rounds (" +
                          std::to_string(warmup_rounds) + " vs " + std::to_string(total_rounds) +
                          ")");
    if (!(lambda > 0.0)) throw ConfigError("lambda must be > 0");
    if (!(confidence > 0.5) || !(confidence < 1.0))
        throw ConfigError("confidence must be in (0.5, 1)");
    if (min_component_size < 1) throw ConfigError("min_component_size must be >= 1");
    if (acag_mode == AcagMode::Rounds && acag_rounds < 1)
        throw ConfigError("acag_mode=rounds requires a positive round count");
}

EstimationResult completeness_from_predictions(const ClientState& client,
                                               const std::vector<Mask3>& predicted,
                                               const FedIAConfig& cfg) {
    EstimationResult r;
    long labels = 0, preds = 0;
    if (cfg.per_volume_components) {
        if (predicted.size() != client.volumes.size())
            throw ShapeError("completeness_from_predictions: one mask per volume expected");
        for (std::size_t v = 0; v < client.volumes.size(); ++v) {
            labels += count_components(client.volumes[v].noisy_mask, Connectivity::Face);
            preds += count_components(predicted[v], Connectivity::Face, cfg.min_component_size);
        }
    } else {
        std::size_t s = 0;
        for (const auto& vol : client.volumes) {
            for (int d = 0; d < vol.noisy_mask.depth; ++d, ++s) {
                if (s >= predicted.size())
                    throw ShapeError("completeness_from_predictions: one mask per slice expected");
                labels += count_components_slice(vol.noisy_mask.slice(d), vol.noisy_mask.height,
                                                 vol.noisy_mask.width, Connectivity::Face);
                const auto& pm = predicted[s];
                preds += count_components(pm, Connectivity::Face, cfg.min_component_size);
            }
        }
        if (s != predicted.size())
            throw ShapeError("completeness_from_predictions: one mask per slice expected");
    }

    r.label_components = labels;
    r.predicted_components = preds;
    if (preds == 0) {
        // The model found nothing: no evidence of incompleteness.
        r.raw = 1.0;
        r.clamped = 1.0;
        r.warned = true;
    } else {
        r.raw = static_cast<double>(labels) / static_cast<double>(preds);
        r.clamped = std::clamp(r.raw, kAhatFloor, 1.0);
    }
    return r;
}

EstimationResult estimate_completeness(ClientState& client, const Network& net,
                                       const ModelParams& warmup_global, const FedIAConfig& cfg) {
    Network::Scratch scratch;
    std::vector<double> probs(net.pixels());
    std::vector<Mask3> predicted;
    for (const auto& vol : client.volumes) {
        Mask3 pred_vol(vol.image.depth, vol.image.height, vol.image.width, 0);
        for (int d = 0; d < vol.image.depth; ++d) {
            net.forward(warmup_global, vol.image.slice(d), probs, scratch);
            auto out = pred_vol.slice(d);
            for (std::size_t i = 0; i < probs.size(); ++i)
                out[i] = probs[i] > kPredictionThreshold ? 1 : 0;
            if (!cfg.per_volume_components) {
                Mask3 slice_mask(1, vol.image.height, vol.image.width);
                std::copy(out.begin(), out.end(), slice_mask.data.begin());
                predicted.push_back(std::move(slice_mask));
            }
        }
        if (cfg.per_volume_components) predicted.push_back(std::move(pred_vol));
    }
    const EstimationResult r = completeness_from_predictions(client, predicted, cfg);
    client.a_hat_raw = r.raw;
    client.a_hat = r.clamped;
    client.a_hat_warned = r.warned;
    client.label_components = r.label_components;
    client.predicted_components = r.predicted_components;
    return r;
}

std::vector<double> acag_weights(std::span<const double> a_hat, std::span<const double> losses) {
    if (a_hat.empty() || a_hat.size() != losses.size())
        throw AggregationError("acag_weights: bad input sizes");
    std::vector<double> score(a_hat.size());
    for (std::size_t k = 0; k < a_hat.size(); ++k)
        score[k] = a_hat[k] / std::max(losses[k], kLossFloor);
    const double top = *std::max_element(score.begin(), score.end());
    double denom = 0.0;
    std::vector<double> weights(score.size());
    for (std::size_t k = 0; k < score.size(); ++k) {
        weights[k] = std::exp(score[k] - top);
        denom += weights[k];
    }
    for (auto& w : weights) w /= denom;
    return weights;
}

TrendFit fit_iou_trend(std::span<const double> iou_history) {
    const std::size_t n = iou_history.size();
    if (n < 2) throw RunError("fit_iou_trend: need at least two warm-up points");
    double st = 0.0, sy = 0.0, sty = 0.0, stt = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i + 1);
        st += t;
        sy += iou_history[i];
        sty += t * iou_history[i];
        stt += t * t;
    }
    const double nd = static_cast<double>(n);
    const double denom = nd * stt - st * st;
    TrendFit fit;
    fit.slope = (nd * sty - st * sy) / denom;
    fit.intercept = (sy - fit.slope * st) / nd;
    fit.fit_rounds = static_cast<int>(n);
    return fit;
}

bool correction_due(const TrendFit& fit, int round, double actual_iou, double lambda) {
    return fit.at(round) - actual_iou > lambda;
}

CorrectionEvent correct_annotations(ClientState& client, const Network& net,
                                    const ModelParams& global, double confidence) {
    CorrectionEvent ev;
    ev.client = client.id;
    Network::Scratch scratch;
    std::vector<double> probs(net.pixels());
    for (auto& vol : client.volumes) {
        for (int d = 0; d < vol.image.depth; ++d) {
            net.forward(global, vol.image.slice(d), probs, scratch);
            auto working = vol.working_mask.slice(d);
            auto gt = vol.gt_mask.slice(d);
            for (std::size_t i = 0; i < probs.size(); ++i) {
                if (working[i] == 0 && probs[i] > confidence) {
                    working[i] = 1;
                    ++ev.flipped;
                    ev.flipped_in_gt += gt[i] ? 1 : 0;
                }
            }
        }
    }
    return ev;
}

}  // namespace fedia
