#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedia/rng.hpp"

namespace fedia {

// Small same-padding convolutional segmentation net: kxk convs over the
// hidden channel list, leaky-ReLU between layers, a final kxk conv to one
// channel, logistic sigmoid output. Parameters are f64 throughout.
struct ModelConfig {
    int in_channels = 1;
    std::vector<int> hidden_channels = {8, 16, 8};
    int kernel_size = 3;
    int grid_height = 32;
    int grid_width = 32;
    double leaky_slope = 0.01;

    void validate() const;  // throws ConfigError
};

struct ConvLayerSpec {
    int in_ch = 0;
    int out_ch = 0;
    std::size_t weight_offset = 0;  // out_ch*in_ch*k*k values, [out][in][kh][kw]
    std::size_t bias_offset = 0;    // out_ch values
};

struct ModelLayout {
    std::vector<ConvLayerSpec> layers;
    int kernel = 3;
    std::size_t total = 0;
};

// Flat parameter vector; the unit of aggregation.
struct ModelParams {
    std::vector<double> values;

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Adam with (beta1, beta2) = (0.9, 0.99), bias correction, eps = 1e-8.
struct OptimizerState {
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double lr = 1e-3;
    double eps = 1e-8;

    OptimizerState(std::size_t n, double learning_rate)
        : m(n, 0.0), v(n, 0.0), lr(learning_rate) {}
};

// Smoothed soft Dice loss: 1 - (2*sum(p*y)+s) / (sum(p^2)+sum(y^2)+s).
// The smoothing term makes empty-prediction-vs-empty-target a perfect fit.
double dice_loss(std::span<const double> pred, std::span<const std::uint8_t> target,
                 double smooth = 1.0);

// Coordinatewise convex combination of parameter vectors. Weights must be
// nonnegative and sum to 1 within 1e-9; throws AggregationError otherwise.
ModelParams params_interp(const std::vector<ModelParams>& params, std::span<const double> weights);

// One Adam update in place. Throws UpdateError on non-finite gradients.
void adam_step(ModelParams& params, std::span<const double> grad, OptimizerState& state);

class Network {
  public:
    explicit Network(ModelConfig cfg);

    const ModelConfig& config() const { return cfg_; }
    const ModelLayout& layout() const { return layout_; }
    std::size_t param_count() const { return layout_.total; }
    std::size_t pixels() const { return static_cast<std::size_t>(cfg_.grid_height) * cfg_.grid_width; }

    // Glorot-uniform weights, zero biases.
    ModelParams init_params(Rng& rng) const;

    // Reusable activation buffers; one per concurrent caller.
    struct Scratch {
        std::vector<std::vector<double>> act;  // act[l]: input of layer l
        std::vector<std::vector<double>> pre;  // pre[l]: pre-activation of layer l
        std::vector<double> grad_a, grad_b;
    };

    // Per-pixel probabilities for one grid_height x grid_width slice.
    void forward(const ModelParams& p, std::span<const float> image, std::span<double> probs,
                 Scratch& scratch) const;
    std::vector<double> forward(const ModelParams& p, std::span<const float> image) const;

    // Accumulates the exact gradient of dice_loss(forward(image), target)
    // into grad (length param_count()); returns the loss.
    double loss_and_grad(const ModelParams& p, std::span<const float> image,
                         std::span<const std::uint8_t> target, std::span<double> grad,
                         Scratch& scratch) const;
    std::vector<double> backward(const ModelParams& p, std::span<const float> image,
                                 std::span<const std::uint8_t> target) const;

  private:
    void check_params(const ModelParams& p) const;
    void conv_forward(const ConvLayerSpec& layer, std::span<const double> params,
                      const std::vector<double>& in, std::vector<double>& out) const;

    ModelConfig cfg_;
    ModelLayout layout_;
};

}  // namespace fedia
