#include "fedia/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedia/errors.hpp"

namespace fedia {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

void ModelConfig::validate() const {
    if (in_channels != 1) throw ConfigError("model expects single-channel input");
    if (kernel_size < 1 || kernel_size % 2 == 0)
        throw ConfigError("kernel_size must be odd, got " + std::to_string(kernel_size));
    if (grid_height < 1 || grid_width < 1) throw ConfigError("model grid must be >= 1x1");
    for (int c : hidden_channels)
        if (c < 1) throw ConfigError("hidden channel counts must be >= 1");
    if (leaky_slope < 0.0 || leaky_slope >= 1.0)
        throw ConfigError("leaky_slope must be in [0, 1)");
}

double dice_loss(std::span<const double> pred, std::span<const std::uint8_t> target,
                 double smooth) {
    if (pred.size() != target.size()) throw ShapeError("dice_loss: size mismatch");
    double inter = 0.0, psq = 0.0, ysq = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = pred[i];
        const double y = target[i] ? 1.0 : 0.0;
        inter += p * y;
        psq += p * p;
        ysq += y;
    }
    return 1.0 - (2.0 * inter + smooth) / (psq + ysq + smooth);
}

ModelParams params_interp(const std::vector<ModelParams>& params,
                          std::span<const double> weights) {
    if (params.empty()) throw AggregationError("no parameter vectors to combine");
    if (params.size() != weights.size())
        throw AggregationError("weight count does not match parameter vector count");
    const std::size_t n = params.front().values.size();
    double sum = 0.0;
    for (double w : weights) {
        if (w < -1e-12) throw AggregationError("negative aggregation weight");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw AggregationError("aggregation weights sum to " + std::to_string(sum));

    ModelParams out;
    out.values.assign(n, 0.0);
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (params[k].values.size() != n)
            throw AggregationError("parameter vector length mismatch");
        const double w = weights[k];
        if (w == 0.0) continue;
        const double* src = params[k].values.data();
        double* dst = out.values.data();
        for (std::size_t i = 0; i < n; ++i) dst[i] += w * src[i];
    }
    return out;
}

void adam_step(ModelParams& params, std::span<const double> grad, OptimizerState& state) {
    const std::size_t n = params.values.size();
    if (grad.size() != n || state.m.size() != n)
        throw UpdateError("gradient/state length mismatch");
    for (double g : grad)
        if (!std::isfinite(g)) throw UpdateError("non-finite gradient");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grad[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        const double mh = state.m[i] / bc1;
        const double vh = state.v[i] / bc2;
        params.values[i] -= state.lr * mh / (std::sqrt(vh) + state.eps);
    }
}

Network::Network(ModelConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    layout_.kernel = cfg_.kernel_size;
    const int k2 = cfg_.kernel_size * cfg_.kernel_size;
    int prev = cfg_.in_channels;
    std::size_t off = 0;
    auto add_layer = [&](int out_ch) {
        ConvLayerSpec layer;
        layer.in_ch = prev;
        layer.out_ch = out_ch;
        layer.weight_offset = off;
        off += static_cast<std::size_t>(out_ch) * prev * k2;
        layer.bias_offset = off;
        off += out_ch;
        layout_.layers.push_back(layer);
        prev = out_ch;
    };
    for (int c : cfg_.hidden_channels) add_layer(c);
    add_layer(1);
    layout_.total = off;
}

ModelParams Network::init_params(Rng& rng) const {
    const int k2 = cfg_.kernel_size * cfg_.kernel_size;
    ModelParams p;
    p.values.assign(layout_.total, 0.0);
    for (const auto& layer : layout_.layers) {
        const double fan_in = static_cast<double>(layer.in_ch) * k2;
        const double fan_out = static_cast<double>(layer.out_ch) * k2;
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        const std::size_t nw = static_cast<std::size_t>(layer.out_ch) * layer.in_ch * k2;
        for (std::size_t i = 0; i < nw; ++i)
            p.values[layer.weight_offset + i] = rng.uniform(-limit, limit);
    }
    return p;
}

void Network::check_params(const ModelParams& p) const {
    if (p.values.size() != layout_.total)
        throw ShapeError("parameter vector has " + std::to_string(p.values.size()) +
                         " values, layout expects " + std::to_string(layout_.total));
}

void Network::conv_forward(const ConvLayerSpec& layer, std::span<const double> params,
                           const std::vector<double>& in, std::vector<double>& out) const {
    const int H = cfg_.grid_height, W = cfg_.grid_width;
    const int k = cfg_.kernel_size, pad = k / 2;
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    out.assign(static_cast<std::size_t>(layer.out_ch) * plane, 0.0);

    for (int co = 0; co < layer.out_ch; ++co) {
        double* out_c = out.data() + co * plane;
        const double bias = params[layer.bias_offset + co];
        std::fill(out_c, out_c + plane, bias);
        for (int ci = 0; ci < layer.in_ch; ++ci) {
            const double* in_c = in.data() + ci * plane;
            const double* wk =
                params.data() + layer.weight_offset +
                (static_cast<std::size_t>(co) * layer.in_ch + ci) * k * k;
            for (int dh = 0; dh < k; ++dh) {
                const int hoff = dh - pad;
                const int h0 = std::max(0, -hoff), h1 = std::min(H, H - hoff);
                for (int dw = 0; dw < k; ++dw) {
                    const double wv = wk[dh * k + dw];
                    const int woff = dw - pad;
                    const int w0 = std::max(0, -woff), w1 = std::min(W, W - woff);
                    for (int h = h0; h < h1; ++h) {
                        const double* src = in_c + (h + hoff) * W + (w0 + woff);
                        double* dst = out_c + h * W + w0;
                        for (int x = 0; x < w1 - w0; ++x) dst[x] += wv * src[x];
                    }
                }
            }
        }
    }
}

void Network::forward(const ModelParams& p, std::span<const float> image, std::span<double> probs,
                      Scratch& s) const {
    check_params(p);
    const std::size_t plane = pixels();
    if (image.size() != plane) throw ShapeError("image size does not match model grid");
    if (probs.size() != plane) throw ShapeError("output size does not match model grid");

    const std::size_t n_layers = layout_.layers.size();
    s.act.resize(n_layers);
    s.pre.resize(n_layers);
    s.act[0].resize(plane);
    for (std::size_t i = 0; i < plane; ++i) s.act[0][i] = image[i];

    for (std::size_t l = 0; l < n_layers; ++l) {
        conv_forward(layout_.layers[l], p.values, s.act[l], s.pre[l]);
        if (l + 1 < n_layers) {
            s.act[l + 1].resize(s.pre[l].size());
            const double slope = cfg_.leaky_slope;
            for (std::size_t i = 0; i < s.pre[l].size(); ++i) {
                const double z = s.pre[l][i];
                s.act[l + 1][i] = z > 0.0 ? z : slope * z;
            }
        }
    }
    const auto& logits = s.pre[n_layers - 1];
    for (std::size_t i = 0; i < plane; ++i) probs[i] = sigmoid(logits[i]);
}

std::vector<double> Network::forward(const ModelParams& p, std::span<const float> image) const {
    Scratch s;
    std::vector<double> probs(pixels());
    forward(p, image, probs, s);
    return probs;
}

double Network::loss_and_grad(const ModelParams& p, std::span<const float> image,
                              std::span<const std::uint8_t> target, std::span<double> grad,
                              Scratch& s) const {
    if (grad.size() != layout_.total) throw ShapeError("gradient buffer length mismatch");
    if (target.size() != pixels()) throw ShapeError("target size does not match model grid");

    const std::size_t plane = pixels();
    std::vector<double> probs(plane);
    forward(p, image, probs, s);

    // Dice loss and its gradient w.r.t. probabilities, then through the sigmoid.
    const double smooth = 1.0;
    double inter = 0.0, psq = 0.0, ysq = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
        const double y = target[i] ? 1.0 : 0.0;
        inter += probs[i] * y;
        psq += probs[i] * probs[i];
        ysq += y;
    }
    const double a = 2.0 * inter + smooth;
    const double b = psq + ysq + smooth;
    const double loss = 1.0 - a / b;

    const std::size_t n_layers = layout_.layers.size();
    s.grad_a.resize(plane);
    for (std::size_t i = 0; i < plane; ++i) {
        const double y = target[i] ? 1.0 : 0.0;
        const double dl_dp = (2.0 * a * probs[i] - 2.0 * b * y) / (b * b);
        s.grad_a[i] = dl_dp * probs[i] * (1.0 - probs[i]);
    }

    // Walk layers in reverse; dz holds dL/d(pre-activation of layer l).
    const int H = cfg_.grid_height, W = cfg_.grid_width;
    const int k = cfg_.kernel_size, pad = k / 2;
    std::vector<double>* dz = &s.grad_a;
    std::vector<double>* din = &s.grad_b;
    for (std::size_t li = n_layers; li-- > 0;) {
        const auto& layer = layout_.layers[li];
        const auto& in = s.act[li];
        const std::size_t plane_sz = plane;

        if (li > 0) din->assign(in.size(), 0.0);
        for (int co = 0; co < layer.out_ch; ++co) {
            const double* dz_c = dz->data() + co * plane_sz;
            double bias_g = 0.0;
            for (std::size_t i = 0; i < plane_sz; ++i) bias_g += dz_c[i];
            grad[layer.bias_offset + co] += bias_g;

            for (int ci = 0; ci < layer.in_ch; ++ci) {
                const double* in_c = in.data() + ci * plane_sz;
                double* din_c = li > 0 ? din->data() + ci * plane_sz : nullptr;
                const std::size_t wbase =
                    layer.weight_offset +
                    (static_cast<std::size_t>(co) * layer.in_ch + ci) * k * k;
                for (int dh = 0; dh < k; ++dh) {
                    const int hoff = dh - pad;
                    const int h0 = std::max(0, -hoff), h1 = std::min(H, H - hoff);
                    for (int dw = 0; dw < k; ++dw) {
                        const int woff = dw - pad;
                        const int w0 = std::max(0, -woff), w1 = std::min(W, W - woff);
                        const double wv = p.values[wbase + dh * k + dw];
                        // Fixed-order partial sums keep the reduction
                        // deterministic while letting it vectorize.
                        double wg0 = 0.0, wg1 = 0.0, wg2 = 0.0, wg3 = 0.0;
                        const int len = w1 - w0;
                        for (int h = h0; h < h1; ++h) {
                            const double* src = in_c + (h + hoff) * W + (w0 + woff);
                            const double* dzr = dz_c + h * W + w0;
                            int x = 0;
                            for (; x + 4 <= len; x += 4) {
                                wg0 += dzr[x] * src[x];
                                wg1 += dzr[x + 1] * src[x + 1];
                                wg2 += dzr[x + 2] * src[x + 2];
                                wg3 += dzr[x + 3] * src[x + 3];
                            }
                            for (; x < len; ++x) wg0 += dzr[x] * src[x];
                        }
                        grad[wbase + dh * k + dw] += (wg0 + wg1) + (wg2 + wg3);
                        if (din_c) {
                            for (int h = h0; h < h1; ++h) {
                                double* dst = din_c + (h + hoff) * W + (w0 + woff);
                                const double* dzr = dz_c + h * W + w0;
                                for (int x = 0; x < w1 - w0; ++x) dst[x] += wv * dzr[x];
                            }
                        }
                    }
                }
            }
        }
        if (li > 0) {
            // Through the leaky ReLU that produced act[li].
            const double slope = cfg_.leaky_slope;
            const auto& pre_prev = s.pre[li - 1];
            for (std::size_t i = 0; i < din->size(); ++i)
                (*din)[i] *= pre_prev[i] > 0.0 ? 1.0 : slope;
            std::swap(dz, din);
        }
    }
    return loss;
}

std::vector<double> Network::backward(const ModelParams& p, std::span<const float> image,
                                      std::span<const std::uint8_t> target) const {
    Scratch s;
    std::vector<double> grad(layout_.total, 0.0);
    loss_and_grad(p, image, target, grad, s);
    return grad;
}

}  // namespace fedia
