#include "fedia/run.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "fedia/errors.hpp"
#include "fedia/serialize.hpp"

namespace fedia {

namespace {

ModelConfig resolved_model_config(const RunConfig& cfg) {
    ModelConfig mc = cfg.model;
    mc.grid_height = cfg.volume.height;
    mc.grid_width = cfg.volume.width;
    return mc;
}

}  // namespace

double last_window_mean_dice(const std::vector<RoundRecord>& records, int window) {
    if (records.empty()) return 0.0;
    const int last = records.back().round;
    double sum = 0.0;
    int n = 0;
    for (const auto& rec : records) {
        if (rec.round <= last - window) continue;
        if (std::isnan(rec.test_dice)) continue;
        sum += rec.test_dice;
        ++n;
    }
    return n > 0 ? sum / n : 0.0;
}

FederationRun::FederationRun(const RunConfig& cfg) : cfg_(cfg), net_(resolved_model_config(cfg)) {
    cfg_.validate();
    cfg_.fedia.total_rounds = cfg_.total_rounds;

    FederatedDataset ds = build_federation(cfg_.federation_spec(), cfg_.seed);
    test_ = std::move(ds.test_set);
    for (int k = 0; k < cfg_.clients; ++k)
        clients_.push_back(make_client(k, std::move(ds.clients[k]), ds.completeness[k]));

    Rng init_rng = make_rng(cfg_.seed, Stream::Init);
    global_ = net_.init_params(init_rng);
}

Stage FederationRun::stage_for(int round) const {
    if (round <= cfg_.fedia.warmup_rounds) return Stage::Warmup;
    if (cfg_.method == Method::FedAvg) return Stage::Final;
    switch (cfg_.fedia.acag_mode) {
        case FedIAConfig::AcagMode::Always:
            return Stage::Modification;
        case FedIAConfig::AcagMode::Rounds:
            return round > cfg_.fedia.warmup_rounds + cfg_.fedia.acag_rounds ? Stage::Final
                                                                             : Stage::Modification;
        case FedIAConfig::AcagMode::UntilAllCorrected: {
            if (!uses_cac()) return Stage::Modification;  // nothing ever corrects
            for (const auto& c : clients_)
                if (c.correction_rounds.empty()) return Stage::Modification;
            return Stage::Final;
        }
    }
    return Stage::Modification;
}

void FederationRun::step() {
    if (done()) throw RunError("step() called on a finished run");
    const int t = next_round_;
    const int T = cfg_.fedia.warmup_rounds;

    RoundRecord record;
    record.round = t;

    // Corrections scheduled by last round's trigger fire before training,
    // against the model that raised them.
    if (uses_cac()) {
        for (auto& client : clients_) {
            if (!client.correction_pending) continue;
            CorrectionEvent ev = correct_annotations(client, net_, global_, cfg_.fedia.confidence);
            ev.round = t;
            corrections_.push_back(ev);
            client.correction_rounds.push_back(t);
            client.correction_pending = false;
            record.corrected.push_back(client.id);
        }
    }

    const Stage stage = stage_for(t);
    record.stage = stage;
    if (stage == Stage::Modification && first_modification_round_ < 0)
        first_modification_round_ = t;
    if (stage == Stage::Final && first_final_round_ < 0 && cfg_.method != Method::FedAvg)
        first_final_round_ = t;

    // Local training from the shared incoming global.
    TrainOptions opts;
    opts.epochs = cfg_.local_epochs;
    opts.batch_size = cfg_.batch_size;
    opts.lr = cfg_.lr;
    opts.master_seed = cfg_.seed;

    record.weights.assign(clients_.size(), 0.0);
    record.losses.assign(clients_.size(), std::numeric_limits<double>::quiet_NaN());
    record.ious.assign(clients_.size(), std::numeric_limits<double>::quiet_NaN());

    std::vector<ModelParams> trained;
    std::vector<std::size_t> active;
    for (std::size_t k = 0; k < clients_.size(); ++k) {
        auto result = local_train(clients_[k], net_, global_, t, opts);
        if (!result.ok) continue;
        record.losses[k] = result.avg_loss;
        trained.push_back(std::move(result.params));
        active.push_back(k);
    }
    if (active.empty()) throw RunError("round " + std::to_string(t) + ": every client aborted");

    const bool acag_now =
        uses_acag() && (stage == Stage::Modification ||
                        (stage == Stage::Final && cfg_.fedia.acag_in_final));
    std::vector<double> weights(active.size());
    if (acag_now) {
        std::vector<double> a_hat(active.size()), losses(active.size());
        for (std::size_t i = 0; i < active.size(); ++i) {
            const auto& c = clients_[active[i]];
            if (c.a_hat < 0.0) throw RunError("completeness estimate missing before re-weighting");
            a_hat[i] = c.a_hat;
            losses[i] = record.losses[active[i]];
        }
        weights = acag_weights(a_hat, losses);
    } else {
        long total = 0;
        for (auto k : active) total += clients_[k].slice_count();
        for (std::size_t i = 0; i < active.size(); ++i)
            weights[i] =
                static_cast<double>(clients_[active[i]].slice_count()) / static_cast<double>(total);
    }
    for (std::size_t i = 0; i < active.size(); ++i) record.weights[active[i]] = weights[i];

    global_ = params_interp(trained, weights);

    for (std::size_t k = 0; k < clients_.size(); ++k)
        record.ious[k] = client_iou(clients_[k], net_, global_);

    // End of warm-up: estimate completeness and fit per-client IoU trends.
    if (t == T && uses_estimation()) {
        for (auto& client : clients_) {
            estimate_completeness(client, net_, global_, cfg_.fedia);
            client.trend = fit_iou_trend(
                std::span<const double>(client.iou_history.data(),
                                        std::min<std::size_t>(client.iou_history.size(),
                                                              static_cast<std::size_t>(T))));
        }
    }

    // Trend-gap triggers schedule corrections for the next round.
    if (uses_cac() && t > T && stage == Stage::Modification) {
        for (auto& client : clients_) {
            if (!client.trend) throw RunError("missing IoU trend after warm-up");
            const double actual = client.iou_history.back();
            if (correction_due(*client.trend, t, actual, cfg_.fedia.lambda))
                client.correction_pending = true;
        }
    }

    if (t % cfg_.eval_every == 0 || t == cfg_.total_rounds) {
        last_eval_ = evaluate(net_, global_, test_);
        evaluated_once_ = true;
        record.test_dice = last_eval_.mean_dice;
    }

    records_.push_back(std::move(record));
    ++next_round_;
}

RunResult FederationRun::result() const {
    RunResult r;
    r.id = run_id(cfg_);
    r.config = cfg_;
    r.records = records_;
    r.final_params = global_;
    for (const auto& c : clients_) {
        ClientReport rep;
        rep.id = c.id;
        rep.a_true = c.true_completeness;
        rep.a_hat_raw = c.a_hat_raw;
        rep.a_hat = c.a_hat;
        rep.label_components = c.label_components;
        rep.predicted_components = c.predicted_components;
        rep.warned = c.a_hat_warned;
        r.estimation.push_back(rep);
    }
    r.corrections = corrections_;
    r.final_eval = last_eval_;
    r.first_modification_round = first_modification_round_;
    r.first_final_round = first_final_round_;
    r.last_window_dice = last_window_mean_dice(records_, cfg_.last_window);
    return r;
}

RunSnapshot FederationRun::snapshot() const {
    RunSnapshot snap;
    snap.next_round = next_round_;
    snap.global = global_;
    for (const auto& c : clients_) {
        RunSnapshot::ClientSnap cs;
        for (const auto& vol : c.volumes) cs.working_masks.push_back(vol.working_mask);
        cs.loss_history = c.loss_history;
        cs.iou_history = c.iou_history;
        cs.a_hat_raw = c.a_hat_raw;
        cs.a_hat = c.a_hat;
        cs.a_hat_warned = c.a_hat_warned;
        cs.label_components = c.label_components;
        cs.predicted_components = c.predicted_components;
        cs.trend = c.trend;
        cs.correction_rounds = c.correction_rounds;
        cs.correction_pending = c.correction_pending;
        snap.clients.push_back(std::move(cs));
    }
    return snap;
}

void FederationRun::restore(const RunSnapshot& snap) {
    if (snap.clients.size() != clients_.size())
        throw RunError("snapshot client count does not match this run");
    if (snap.global.values.size() != net_.param_count())
        throw RunError("snapshot parameter vector does not match this model");
    next_round_ = snap.next_round;
    global_ = snap.global;
    for (std::size_t k = 0; k < clients_.size(); ++k) {
        auto& c = clients_[k];
        const auto& cs = snap.clients[k];
        if (cs.working_masks.size() != c.volumes.size())
            throw RunError("snapshot volume count does not match client " + std::to_string(c.id));
        for (std::size_t v = 0; v < c.volumes.size(); ++v) {
            if (!cs.working_masks[v].same_shape(c.volumes[v].working_mask))
                throw RunError("snapshot mask shape mismatch");
            c.volumes[v].working_mask = cs.working_masks[v];
        }
        c.loss_history = cs.loss_history;
        c.iou_history = cs.iou_history;
        c.a_hat_raw = cs.a_hat_raw;
        c.a_hat = cs.a_hat;
        c.a_hat_warned = cs.a_hat_warned;
        c.label_components = cs.label_components;
        c.predicted_components = cs.predicted_components;
        c.trend = cs.trend;
        c.correction_rounds = cs.correction_rounds;
        c.correction_pending = cs.correction_pending;
    }
}

void save_snapshot(const RunSnapshot& snap, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    write_params_fiap((fs::path(dir) / "params.fiap").string(), snap.global);

    nlohmann::json state;
    state["next_round"] = snap.next_round;
    auto& jclients = state["clients"] = nlohmann::json::array();
    for (std::size_t k = 0; k < snap.clients.size(); ++k) {
        const auto& cs = snap.clients[k];
        nlohmann::json jc;
        jc["loss_history"] = cs.loss_history;
        jc["iou_history"] = cs.iou_history;
        jc["a_hat_raw"] = cs.a_hat_raw;
        jc["a_hat"] = cs.a_hat;
        jc["a_hat_warned"] = cs.a_hat_warned;
        jc["label_components"] = cs.label_components;
        jc["predicted_components"] = cs.predicted_components;
        if (cs.trend) {
            jc["trend"] = {{"slope", cs.trend->slope},
                           {"intercept", cs.trend->intercept},
                           {"fit_rounds", cs.trend->fit_rounds}};
        }
        jc["correction_rounds"] = cs.correction_rounds;
        jc["correction_pending"] = cs.correction_pending;
        jc["volumes"] = cs.working_masks.size();
        jclients.push_back(std::move(jc));
        for (std::size_t v = 0; v < cs.working_masks.size(); ++v) {
            const auto name = "client" + std::to_string(k) + "_vol" + std::to_string(v) + ".fiav";
            write_mask_fiav((fs::path(dir) / name).string(), cs.working_masks[v]);
        }
    }
    std::ofstream out(fs::path(dir) / "state.json");
    if (!out) throw FormatError("cannot write snapshot state: " + dir);
    out << state.dump(2) << '\n';
}

RunSnapshot load_snapshot(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream in(fs::path(dir) / "state.json");
    if (!in) throw FormatError("cannot read snapshot state: " + dir);
    nlohmann::json state;
    in >> state;

    RunSnapshot snap;
    snap.next_round = state.at("next_round").get<int>();
    snap.global = read_params_fiap((fs::path(dir) / "params.fiap").string());
    std::size_t k = 0;
    for (const auto& jc : state.at("clients")) {
        RunSnapshot::ClientSnap cs;
        cs.loss_history = jc.at("loss_history").get<std::vector<double>>();
        cs.iou_history = jc.at("iou_history").get<std::vector<double>>();
        cs.a_hat_raw = jc.at("a_hat_raw").get<double>();
        cs.a_hat = jc.at("a_hat").get<double>();
        cs.a_hat_warned = jc.at("a_hat_warned").get<bool>();
        cs.label_components = jc.at("label_components").get<long>();
        cs.predicted_components = jc.at("predicted_components").get<long>();
        if (jc.contains("trend")) {
            TrendFit fit;
            fit.slope = jc["trend"].at("slope").get<double>();
            fit.intercept = jc["trend"].at("intercept").get<double>();
            fit.fit_rounds = jc["trend"].at("fit_rounds").get<int>();
            cs.trend = fit;
        }
        cs.correction_rounds = jc.at("correction_rounds").get<std::vector<int>>();
        cs.correction_pending = jc.at("correction_pending").get<bool>();
        const auto volumes = jc.at("volumes").get<std::size_t>();
        for (std::size_t v = 0; v < volumes; ++v) {
            const auto name = "client" + std::to_string(k) + "_vol" + std::to_string(v) + ".fiav";
            cs.working_masks.push_back(read_mask_fiav((fs::path(dir) / name).string()));
        }
        snap.clients.push_back(std::move(cs));
        ++k;
    }
    return snap;
}

RunResult run_federation(const RunConfig& cfg) {
    FederationRun run(cfg);
    while (!run.done()) run.step();
    return run.result();
}

}  // namespace fedia
