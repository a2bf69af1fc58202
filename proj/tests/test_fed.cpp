#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fedia/errors.hpp"
#include "fedia/fed.hpp"
#include "fedia/rng.hpp"

using namespace fedia;
using doctest::Approx;

namespace {

VolumeSpec tiny_spec() {
    VolumeSpec s;
    s.depth = 4;
    s.height = 16;
    s.width = 16;
    s.lesion_count_min = 2;
    s.lesion_count_max = 3;
    s.lesion_radius_min = 1.4;
    s.lesion_radius_max = 2.2;
    return s;
}

ModelConfig tiny_model() {
    ModelConfig cfg;
    cfg.hidden_channels = {4, 6};
    cfg.grid_height = 16;
    cfg.grid_width = 16;
    return cfg;
}

ClientState tiny_client(int id, std::uint64_t seed, int volumes = 1) {
    std::vector<LabeledVolume> vols;
    for (int i = 0; i < volumes; ++i)
        vols.push_back(generate_volume(tiny_spec(), derive_seed(seed, Stream::DataGen, i)));
    return make_client(id, std::move(vols), 1.0);
}

}  // namespace

TEST_CASE("epochs = 0 returns the global params and an evaluation-only loss") {
    Network net(tiny_model());
    Rng rng(make_rng(1, Stream::Init));
    const auto global = net.init_params(rng);
    auto client = tiny_client(0, 100);

    TrainOptions opts;
    opts.epochs = 0;
    const auto result = local_train(client, net, global, 1, opts);
    CHECK(result.ok);
    CHECK(result.params == global);
    CHECK(result.avg_loss > 0.0);
    CHECK(client.loss_history.size() == 1);
    CHECK(client.loss_history[0] == Approx(result.avg_loss));
}

TEST_CASE("training reduces the loss and overfits one clean volume") {
    Network net(tiny_model());
    Rng rng(make_rng(2, Stream::Init));
    auto params = net.init_params(rng);
    auto client = tiny_client(0, 200);

    TrainOptions opts;
    opts.epochs = 1;
    opts.batch_size = 4;
    opts.lr = 1e-2;
    opts.master_seed = 7;

    double loss = 1.0;
    for (int round = 1; round <= 120; ++round) {
        const auto result = local_train(client, net, params, round, opts);
        REQUIRE(result.ok);
        params = result.params;
        loss = result.avg_loss;
    }
    CHECK(loss < 0.1);
    for (double v : params.values) CHECK(std::isfinite(v));
}

TEST_CASE("identical clients with identical seeds train identically") {
    Network net(tiny_model());
    Rng rng(make_rng(3, Stream::Init));
    const auto global = net.init_params(rng);
    auto a = tiny_client(5, 300, 2);
    auto b = tiny_client(5, 300, 2);

    TrainOptions opts;
    opts.master_seed = 11;
    const auto ra = local_train(a, net, global, 3, opts);
    const auto rb = local_train(b, net, global, 3, opts);
    CHECK(ra.params == rb.params);
    CHECK(ra.avg_loss == Approx(rb.avg_loss));

    // A different round shuffles differently.
    auto c = tiny_client(5, 300, 2);
    const auto rc = local_train(c, net, global, 4, opts);
    CHECK(ra.params.values != rc.params.values);
}

TEST_CASE("non-finite global params abort the client without touching history") {
    Network net(tiny_model());
    ModelParams broken;
    broken.values.assign(net.param_count(), std::numeric_limits<double>::quiet_NaN());
    auto client = tiny_client(0, 400);
    TrainOptions opts;
    const auto result = local_train(client, net, broken, 1, opts);
    CHECK_FALSE(result.ok);
    CHECK(client.loss_history.empty());
}

TEST_CASE("fedavg_aggregate weights by sample count") {
    ModelParams a, b;
    a.values = {0.0};
    b.values = {4.0};
    CHECK(fedavg_aggregate({a, b}, {1, 3}).values[0] == Approx(3.0));
    CHECK(fedavg_aggregate({a, b}, {2, 2}).values[0] == Approx(2.0));
    CHECK(fedavg_aggregate({b}, {5}).values[0] == Approx(4.0));
    CHECK_THROWS_AS(fedavg_aggregate({}, {}), AggregationError);
    CHECK_THROWS_AS(fedavg_aggregate({a, b}, {0, 1}), AggregationError);
}

TEST_CASE("slice_iou hand cases") {
    // P = 2x2 block, Y = overlapping 2x2 block sharing 2 pixels -> 2/6.
    std::vector<double> probs(16, 0.0);
    std::vector<std::uint8_t> target(16, 0);
    // 4x4 grid: P covers (0,0),(0,1),(1,0),(1,1); Y covers (0,1),(0,2),(1,1),(1,2).
    probs[0] = probs[1] = probs[4] = probs[5] = 0.9;
    target[1] = target[2] = target[5] = target[6] = 1;
    CHECK(slice_iou(probs, target, 0.5) == Approx(2.0 / 6.0));

    // Both empty -> 1.0.
    std::vector<double> empty(16, 0.1);
    std::vector<std::uint8_t> none(16, 0);
    CHECK(slice_iou(empty, none, 0.5) == Approx(1.0));

    // Prediction exactly at the threshold stays background (strict >).
    std::vector<double> at_thr(16, 0.5);
    CHECK(slice_iou(at_thr, none, 0.5) == Approx(1.0));
}

TEST_CASE("client_iou is 1.0 when the target equals the thresholded prediction") {
    Network net(tiny_model());
    Rng rng(make_rng(4, Stream::Init));
    const auto global = net.init_params(rng);
    auto client = tiny_client(0, 500);

    for (auto& vol : client.volumes) {
        for (int d = 0; d < vol.image.depth; ++d) {
            const auto probs = net.forward(global, vol.image.slice(d));
            auto target = vol.working_mask.slice(d);
            for (std::size_t i = 0; i < probs.size(); ++i) target[i] = probs[i] > 0.5 ? 1 : 0;
        }
    }
    CHECK(client_iou(client, net, global) == Approx(1.0));
    CHECK(client.iou_history.size() == 1);
}

TEST_CASE("run_round trains everyone from the same global and aggregates") {
    Network net(tiny_model());
    Rng rng(make_rng(5, Stream::Init));
    const auto global = net.init_params(rng);
    TrainOptions opts;
    opts.master_seed = 13;

    SUBCASE("single client: new global equals its trained params") {
        std::vector<ClientState> clients;
        clients.push_back(tiny_client(0, 600));
        auto probe = tiny_client(0, 600);
        const auto expect = local_train(probe, net, global, 1, opts);
        const std::vector<double> w = {1.0};
        const auto outcome = run_round(clients, net, global, w, 1, opts);
        CHECK(outcome.global == expect.params);
        CHECK(outcome.record.weights == std::vector<double>{1.0});
    }

    SUBCASE("sample-count weights match fedavg_aggregate") {
        std::vector<ClientState> clients;
        clients.push_back(tiny_client(0, 700, 1));  // 4 slices
        clients.push_back(tiny_client(1, 701, 3));  // 12 slices
        std::vector<ClientState> probes;
        probes.push_back(tiny_client(0, 700, 1));
        probes.push_back(tiny_client(1, 701, 3));

        const std::vector<double> w = {0.25, 0.75};
        const auto outcome = run_round(clients, net, global, w, 2, opts);

        std::vector<ModelParams> trained;
        std::vector<int> counts;
        for (auto& probe : probes) {
            trained.push_back(local_train(probe, net, global, 2, opts).params);
            counts.push_back(probe.slice_count());
        }
        const auto expect = fedavg_aggregate(trained, counts);
        REQUIRE(outcome.global.values.size() == expect.values.size());
        for (std::size_t i = 0; i < expect.values.size(); ++i)
            CHECK(outcome.global.values[i] == Approx(expect.values[i]).epsilon(1e-12));
    }

    SUBCASE("records are reproducible") {
        std::vector<ClientState> c1, c2;
        for (int k = 0; k < 2; ++k) {
            c1.push_back(tiny_client(k, 800 + k));
            c2.push_back(tiny_client(k, 800 + k));
        }
        const std::vector<double> w = {0.5, 0.5};
        const auto o1 = run_round(c1, net, global, w, 1, opts);
        const auto o2 = run_round(c2, net, global, w, 1, opts);
        CHECK(o1.record == o2.record);
        CHECK(o1.global == o2.global);
    }
}

TEST_CASE("round record weights always sum to one over participants") {
    Network net(tiny_model());
    Rng rng(make_rng(6, Stream::Init));
    const auto global = net.init_params(rng);
    std::vector<ClientState> clients;
    for (int k = 0; k < 3; ++k) clients.push_back(tiny_client(k, 900 + k));
    TrainOptions opts;
    const std::vector<double> w = {0.2, 0.3, 0.5};
    const auto outcome = run_round(clients, net, global, w, 1, opts);
    double sum = 0.0;
    for (double v : outcome.record.weights) sum += v;
    CHECK(std::abs(sum - 1.0) <= 1e-9);
    for (const auto& c : clients) {
        CHECK(c.loss_history.size() == 1);
        CHECK(c.iou_history.size() == 1);
    }
}
