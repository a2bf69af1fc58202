#include "fedia/fed.hpp"

#include <cmath>
#include <numeric>

#include "fedia/errors.hpp"

namespace fedia {

namespace {

struct SliceRef {
    int volume = 0;
    int depth = 0;
};

std::vector<SliceRef> slice_refs(const ClientState& client) {
    std::vector<SliceRef> refs;
    for (int v = 0; v < static_cast<int>(client.volumes.size()); ++v)
        for (int d = 0; d < client.volumes[v].image.depth; ++d) refs.push_back({v, d});
    return refs;
}

}  // namespace

ClientState make_client(int id, std::vector<LabeledVolume> volumes, double true_completeness) {
    ClientState c;
    c.id = id;
    c.volumes = std::move(volumes);
    c.true_completeness = true_completeness;
    if (c.volumes.empty()) throw ConfigError("client " + std::to_string(id) + " has no volumes");
    return c;
}

const char* stage_name(Stage stage) {
    switch (stage) {
        case Stage::Warmup: return "warmup";
        case Stage::Modification: return "modification";
        case Stage::Final: return "final";
    }
    return "?";
}

LocalTrainResult local_train(ClientState& client, const Network& net, const ModelParams& global,
                             int round, const TrainOptions& opts) {
    if (client.volumes.empty()) throw ConfigError("local_train: empty client dataset");
    if (opts.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (opts.epochs < 0) throw ConfigError("epochs must be >= 0");

    LocalTrainResult result;
    result.params = global;

    const auto refs = slice_refs(client);
    Network::Scratch scratch;

    if (opts.epochs == 0) {
        double sum = 0.0;
        std::vector<double> probs(net.pixels());
        for (const auto& ref : refs) {
            const auto& vol = client.volumes[ref.volume];
            net.forward(result.params, vol.image.slice(ref.depth), probs, scratch);
            sum += dice_loss(probs, vol.working_mask.slice(ref.depth));
        }
        result.avg_loss = sum / static_cast<double>(refs.size());
        if (!std::isfinite(result.avg_loss)) {
            result.ok = false;
            result.error = "non-finite evaluation loss";
            return result;
        }
        client.loss_history.push_back(result.avg_loss);
        return result;
    }

    OptimizerState optimizer(net.param_count(), opts.lr);
    Rng shuffle_rng = make_rng(opts.master_seed, Stream::Shuffle,
                               static_cast<std::uint64_t>(client.id),
                               static_cast<std::uint64_t>(round));
    std::vector<double> grad(net.param_count());
    std::vector<std::size_t> order(refs.size());
    std::iota(order.begin(), order.end(), 0u);

    double epoch_loss = 0.0;
    try {
        for (int epoch = 0; epoch < opts.epochs; ++epoch) {
            shuffle_rng.shuffle(order);
            double loss_sum = 0.0;
            for (std::size_t start = 0; start < order.size();
                 start += static_cast<std::size_t>(opts.batch_size)) {
                const std::size_t end =
                    std::min(order.size(), start + static_cast<std::size_t>(opts.batch_size));
                std::fill(grad.begin(), grad.end(), 0.0);
                double batch_loss = 0.0;
                for (std::size_t i = start; i < end; ++i) {
                    const auto& ref = refs[order[i]];
                    const auto& vol = client.volumes[ref.volume];
                    batch_loss += net.loss_and_grad(result.params, vol.image.slice(ref.depth),
                                                    vol.working_mask.slice(ref.depth), grad,
                                                    scratch);
                }
                const double inv = 1.0 / static_cast<double>(end - start);
                for (auto& g : grad) g *= inv;
                loss_sum += batch_loss;
                if (!std::isfinite(batch_loss)) {
                    result.ok = false;
                    result.error = "non-finite batch loss";
                    return result;
                }
                adam_step(result.params, grad, optimizer);
            }
            epoch_loss = loss_sum / static_cast<double>(order.size());
        }
    } catch (const UpdateError& e) {
        result.ok = false;
        result.error = e.what();
        return result;
    }

    result.avg_loss = epoch_loss;
    client.loss_history.push_back(result.avg_loss);
    return result;
}

ModelParams fedavg_aggregate(const std::vector<ModelParams>& params,
                             const std::vector<int>& counts) {
    if (params.empty()) throw AggregationError("fedavg_aggregate: no clients");
    if (params.size() != counts.size())
        throw AggregationError("fedavg_aggregate: counts/params size mismatch");
    long total = 0;
    for (int c : counts) {
        if (c < 1) throw AggregationError("fedavg_aggregate: sample counts must be >= 1");
        total += c;
    }
    std::vector<double> weights(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
        weights[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
    return params_interp(params, weights);
}

double slice_iou(std::span<const double> probs, std::span<const std::uint8_t> target,
                 double threshold) {
    if (probs.size() != target.size()) throw ShapeError("slice_iou: size mismatch");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const bool p = probs[i] > threshold;
        const bool y = target[i] != 0;
        inter += (p && y);
        uni += (p || y);
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double client_iou(ClientState& client, const Network& net, const ModelParams& global,
                  double threshold) {
    if (client.volumes.empty()) throw ConfigError("client_iou: empty client dataset");
    Network::Scratch scratch;
    std::vector<double> probs(net.pixels());
    double sum = 0.0;
    int n = 0;
    for (const auto& vol : client.volumes) {
        for (int d = 0; d < vol.image.depth; ++d) {
            net.forward(global, vol.image.slice(d), probs, scratch);
            sum += slice_iou(probs, vol.working_mask.slice(d), threshold);
            ++n;
        }
    }
    const double iou = sum / static_cast<double>(n);
    client.iou_history.push_back(iou);
    return iou;
}

RoundOutcome run_round(std::vector<ClientState>& clients, const Network& net,
                       const ModelParams& global, std::span<const double> weights, int round,
                       const TrainOptions& opts) {
    if (clients.empty()) throw RunError("run_round: no clients");
    if (weights.size() != clients.size()) throw RunError("run_round: weight count mismatch");

    RoundOutcome out;
    out.record.round = round;
    out.record.weights.assign(clients.size(), 0.0);
    out.record.losses.assign(clients.size(), std::numeric_limits<double>::quiet_NaN());
    out.record.ious.assign(clients.size(), std::numeric_limits<double>::quiet_NaN());

    std::vector<ModelParams> trained;
    std::vector<double> active_weights;
    std::vector<std::size_t> active_idx;
    for (std::size_t k = 0; k < clients.size(); ++k) {
        auto result = local_train(clients[k], net, global, round, opts);
        if (!result.ok) continue;
        out.record.losses[k] = result.avg_loss;
        trained.push_back(std::move(result.params));
        active_weights.push_back(weights[k]);
        active_idx.push_back(k);
    }
    if (trained.empty()) throw RunError("run_round: every client aborted");

    double wsum = 0.0;
    for (double w : active_weights) wsum += w;
    if (wsum <= 0.0) throw RunError("run_round: active clients have zero total weight");
    for (auto& w : active_weights) w /= wsum;
    for (std::size_t i = 0; i < active_idx.size(); ++i)
        out.record.weights[active_idx[i]] = active_weights[i];

    out.global = params_interp(trained, active_weights);
    for (std::size_t k = 0; k < clients.size(); ++k)
        out.record.ious[k] = client_iou(clients[k], net, out.global);
    return out;
}

}  // namespace fedia
