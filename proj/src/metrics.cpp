#include "fedia/metrics.hpp"

#include <cstdint>

#include "fedia/errors.hpp"

namespace fedia {

namespace {

struct Overlap {
    std::size_t inter = 0;
    std::size_t p = 0;
    std::size_t g = 0;
};

Overlap count_overlap(const Mask3& pred, const Mask3& gt) {
    if (!pred.same_shape(gt)) throw ShapeError("metric masks have different shapes");
    Overlap o;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred.data[i] != 0;
        const bool g = gt.data[i] != 0;
        o.inter += (p && g);
        o.p += p;
        o.g += g;
    }
    return o;
}

double dice_from(const Overlap& o) {
    if (o.p + o.g == 0) return 1.0;
    return 2.0 * static_cast<double>(o.inter) / static_cast<double>(o.p + o.g);
}

double iou_from(const Overlap& o) {
    const std::size_t uni = o.p + o.g - o.inter;
    if (uni == 0) return 1.0;
    return static_cast<double>(o.inter) / static_cast<double>(uni);
}

}  // namespace

double dice_coeff(const Mask3& pred, const Mask3& gt) { return dice_from(count_overlap(pred, gt)); }

double mask_iou(const Mask3& pred, const Mask3& gt) { return iou_from(count_overlap(pred, gt)); }

double lesion_recall(const Mask3& pred, const Mask3& gt, Connectivity conn) {
    if (!pred.same_shape(gt)) throw ShapeError("metric masks have different shapes");
    const ComponentMap cm = label_components(gt, conn);
    if (cm.count == 0) return 1.0;
    std::vector<std::uint8_t> hit(cm.count + 1, 0);
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred.data[i] && cm.labels.data[i] > 0) hit[cm.labels.data[i]] = 1;
    int touched = 0;
    for (int c = 1; c <= cm.count; ++c) touched += hit[c];
    return static_cast<double>(touched) / static_cast<double>(cm.count);
}

EvalReport evaluate(const Predictor& predictor, const std::vector<LabeledVolume>& test_set,
                    double threshold, EvalGranularity granularity) {
    if (test_set.empty()) throw ConfigError("evaluate: empty test set");
    EvalReport report;
    report.per_volume.reserve(test_set.size());

    Overlap pooled;
    std::vector<double> probs;
    for (const auto& vol : test_set) {
        probs.resize(vol.image.slice_size());
        Mask3 pred(vol.image.depth, vol.image.height, vol.image.width, 0);
        for (int d = 0; d < vol.image.depth; ++d) {
            predictor(vol.image.slice(d), probs);
            auto out = pred.slice(d);
            for (std::size_t i = 0; i < probs.size(); ++i) out[i] = probs[i] > threshold ? 1 : 0;
        }
        VolumeEval ve;
        const Overlap o = count_overlap(pred, vol.gt_mask);
        ve.dice = dice_from(o);
        ve.iou = iou_from(o);
        ve.lesion_recall = lesion_recall(pred, vol.gt_mask);
        report.per_volume.push_back(ve);
        pooled.inter += o.inter;
        pooled.p += o.p;
        pooled.g += o.g;
        report.mean_lesion_recall += ve.lesion_recall;
    }
    report.mean_lesion_recall /= static_cast<double>(test_set.size());

    if (granularity == EvalGranularity::Pooled) {
        report.mean_dice = dice_from(pooled);
        report.mean_iou = iou_from(pooled);
    } else {
        for (const auto& ve : report.per_volume) {
            report.mean_dice += ve.dice;
            report.mean_iou += ve.iou;
        }
        report.mean_dice /= static_cast<double>(test_set.size());
        report.mean_iou /= static_cast<double>(test_set.size());
    }
    return report;
}

EvalReport evaluate(const Network& net, const ModelParams& params,
                    const std::vector<LabeledVolume>& test_set, double threshold,
                    EvalGranularity granularity) {
    Network::Scratch scratch;
    Predictor predictor = [&](std::span<const float> image, std::span<double> probs) {
        net.forward(params, image, probs, scratch);
    };
    return evaluate(predictor, test_set, threshold, granularity);
}

}  // namespace fedia
