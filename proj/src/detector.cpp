#include "noddet/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "noddet/errors.hpp"
#include "noddet/nn/checkpoint.hpp"
#include "noddet/targets/boxes.hpp"

namespace noddet {

void DetectorConfig::validate() const {
    backbone.validate();
    if (input_size < 32 || input_size % 32 != 0)
        throw std::invalid_argument("DetectorConfig: input_size must be a positive multiple of 32");
    if (roi_pool < 1) throw std::invalid_argument("DetectorConfig: roi_pool must be >= 1");
    if (fc_width < 1) throw std::invalid_argument("DetectorConfig: fc_width must be >= 1");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw std::invalid_argument("DetectorConfig: dropout_rate must be in [0, 1)");
    for (double s : anchor_scales_px)
        if (s <= 0.0) throw std::invalid_argument("DetectorConfig: anchor scales must be positive");
}

DetectorConfig DetectorConfig::micro() {
    DetectorConfig c;
    c.backbone = backbone::BackboneConfig::micro();
    c.input_size = 64;
    c.anchor_scales_px = {64.0, 32.0, 16.0, 8.0, 4.0};
    c.roi_pool = 7;
    c.fc_width = 64;
    c.dropout_rate = 0.5;
    c.proposals.post_nms_top_train = 256;
    c.proposals.post_nms_top_eval = 128;
    c.proposals.pre_nms_top = 1024;
    return c;
}

void to_json(nlohmann::json& j, const DetectorConfig& c) {
    j = nlohmann::json{{"backbone", c.backbone},
                       {"input_size", c.input_size},
                       {"anchor_scales_px", c.anchor_scales_px},
                       {"anchor_ratios", c.anchor_ratios},
                       {"roi_pool", c.roi_pool},
                       {"fc_width", c.fc_width},
                       {"dropout_rate", c.dropout_rate},
                       {"proposals",
                        {{"rpn_nms_iou", c.proposals.rpn_nms_iou},
                         {"pre_nms_top", c.proposals.pre_nms_top},
                         {"post_nms_top_train", c.proposals.post_nms_top_train},
                         {"post_nms_top_eval", c.proposals.post_nms_top_eval},
                         {"detection_nms_iou", c.proposals.detection_nms_iou},
                         {"score_floor", c.proposals.score_floor},
                         {"rpn_batch", c.proposals.rpn_batch},
                         {"rpn_pos_fraction", c.proposals.rpn_pos_fraction},
                         {"head_batch", c.proposals.head_batch},
                         {"head_fg_fraction", c.proposals.head_fg_fraction},
                         {"add_gt_proposals", c.proposals.add_gt_proposals},
                         {"min_proposal_px", c.proposals.min_proposal_px}}}};
}

void from_json(const nlohmann::json& j, DetectorConfig& c) {
    j.at("backbone").get_to(c.backbone);
    j.at("input_size").get_to(c.input_size);
    j.at("anchor_scales_px").get_to(c.anchor_scales_px);
    j.at("anchor_ratios").get_to(c.anchor_ratios);
    j.at("roi_pool").get_to(c.roi_pool);
    j.at("fc_width").get_to(c.fc_width);
    j.at("dropout_rate").get_to(c.dropout_rate);
    const auto& p = j.at("proposals");
    p.at("rpn_nms_iou").get_to(c.proposals.rpn_nms_iou);
    p.at("pre_nms_top").get_to(c.proposals.pre_nms_top);
    p.at("post_nms_top_train").get_to(c.proposals.post_nms_top_train);
    p.at("post_nms_top_eval").get_to(c.proposals.post_nms_top_eval);
    p.at("detection_nms_iou").get_to(c.proposals.detection_nms_iou);
    p.at("score_floor").get_to(c.proposals.score_floor);
    p.at("rpn_batch").get_to(c.proposals.rpn_batch);
    p.at("rpn_pos_fraction").get_to(c.proposals.rpn_pos_fraction);
    p.at("head_batch").get_to(c.proposals.head_batch);
    p.at("head_fg_fraction").get_to(c.proposals.head_fg_fraction);
    p.at("add_gt_proposals").get_to(c.proposals.add_gt_proposals);
    p.at("min_proposal_px").get_to(c.proposals.min_proposal_px);
}

Detector::Detector(const DetectorConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    backbone_ = std::make_unique<backbone::Backbone>(params_, cfg_.backbone);
    rpn_head_ = heads::RpnHead(params_, cfg_.backbone.pyramid_channels);
    classifier_ = heads::ClassifierHead(params_, cfg_.backbone.pyramid_channels, cfg_.roi_pool,
                                        cfg_.fc_width, cfg_.dropout_rate);
    anchors_ = targets::generate_anchors(cfg_.input_size, backbone::kPyramidStrides,
                                         cfg_.anchor_scales_px, cfg_.anchor_ratios);
}

backbone::PyramidVar Detector::pyramid(nn::Graph& g, nn::Var image, bool training) const {
    backbone::PyramidVar p = backbone_->forward(g, image, training);
    p.anchor_scale_px = cfg_.anchor_scales_px;
    return p;
}

heads::RpnOut Detector::rpn(nn::Graph& g, const backbone::PyramidVar& pyramid) const {
    return rpn_head_.forward(g, pyramid);
}

std::vector<ScoredBox> Detector::propose(const nn::Tensor& objectness, const nn::Tensor& deltas,
                                         bool training) const {
    const std::int64_t A = anchors_.size();
    if (objectness.numel() != A || deltas.ndim() != 2 || deltas.dim(0) != A)
        throw std::invalid_argument("propose: prediction/anchor count mismatch");
    const double S = cfg_.input_size;

    std::vector<int> order(static_cast<std::size_t>(A));
    std::iota(order.begin(), order.end(), 0);
    const int pre = std::min<std::int64_t>(cfg_.proposals.pre_nms_top, A);
    std::partial_sort(order.begin(), order.begin() + pre, order.end(), [&](int a, int b) {
        const double sa = objectness.at(a), sb = objectness.at(b);
        return sa > sb || (sa == sb && a < b);
    });
    order.resize(static_cast<std::size_t>(pre));

    std::vector<Box> boxes;
    std::vector<double> scores;
    boxes.reserve(order.size());
    for (int i : order) {
        targets::BoxDelta d;
        d.tx = deltas.at(i, 0);
        d.ty = deltas.at(i, 1);
        d.tw = deltas.at(i, 2);
        d.th = deltas.at(i, 3);
        Box b = clip_box(targets::decode_box(anchors_.boxes[static_cast<std::size_t>(i)], d), S, S);
        if (b.width() < cfg_.proposals.min_proposal_px || b.height() < cfg_.proposals.min_proposal_px)
            continue;
        boxes.push_back(b);
        // sigmoid objectness as proposal score
        scores.push_back(1.0 / (1.0 + std::exp(-objectness.at(i))));
    }
    const std::vector<int> kept = targets::nms(boxes, scores, cfg_.proposals.rpn_nms_iou);
    const int top = training ? cfg_.proposals.post_nms_top_train : cfg_.proposals.post_nms_top_eval;
    std::vector<ScoredBox> out;
    out.reserve(std::min<std::size_t>(kept.size(), static_cast<std::size_t>(top)));
    for (int i : kept) {
        if (static_cast<int>(out.size()) >= top) break;
        out.push_back(ScoredBox{boxes[static_cast<std::size_t>(i)],
                                scores[static_cast<std::size_t>(i)]});
    }
    return out;
}

heads::ClassifierOut Detector::classify(nn::Graph& g, const backbone::PyramidVar& pyramid,
                                        const std::vector<Box>& rois, bool training,
                                        Rng& rng) const {
    if (rois.empty()) throw std::invalid_argument("classify: no rois");
    std::vector<nn::Var> pooled;
    pooled.reserve(rois.size());
    const int P = cfg_.roi_pool;
    const int C = cfg_.backbone.pyramid_channels;
    for (const Box& b : rois) {
        nn::Var feat = heads::roi_align_on_pyramid(g, pyramid, b, P);
        pooled.push_back(g.reshape(feat, {1, C * P * P}));
    }
    return classifier_.forward(g, g.concat_rows(pooled), training, rng);
}

std::vector<ScoredBox> Detector::detect(const nn::Tensor& image) const {
    nn::Graph g;
    nn::Var img = g.leaf(image);
    const backbone::PyramidVar pyr = pyramid(g, img, false);
    const heads::RpnOut rpn_out = rpn(g, pyr);
    const std::vector<ScoredBox> proposals =
        propose(rpn_out.objectness.val(), rpn_out.deltas.val(), false);
    if (proposals.empty()) return {};

    std::vector<Box> rois;
    rois.reserve(proposals.size());
    for (const ScoredBox& p : proposals) rois.push_back(p.box);
    Rng rng(0);  // dropout inactive in eval mode
    const heads::ClassifierOut out = classify(g, pyr, rois, false, rng);

    const nn::Tensor& probs = out.class_probs.val();
    const nn::Tensor& deltas = out.deltas.val();
    const double S = cfg_.input_size;
    std::vector<Box> boxes;
    std::vector<double> scores;
    for (std::size_t i = 0; i < rois.size(); ++i) {
        const double conf = probs.at(static_cast<int>(i), heads::kNoduleClass);
        if (conf < cfg_.proposals.score_floor) continue;
        targets::BoxDelta d;
        d.tx = deltas.at(static_cast<int>(i), 0);
        d.ty = deltas.at(static_cast<int>(i), 1);
        d.tw = deltas.at(static_cast<int>(i), 2);
        d.th = deltas.at(static_cast<int>(i), 3);
        Box b = clip_box(targets::decode_box(rois[i], d), S, S);
        if (!b.valid()) continue;
        boxes.push_back(b);
        scores.push_back(conf);
    }
    const std::vector<int> kept = targets::nms(boxes, scores, cfg_.proposals.detection_nms_iou);
    std::vector<ScoredBox> dets;
    dets.reserve(kept.size());
    for (int i : kept)
        dets.push_back(ScoredBox{boxes[static_cast<std::size_t>(i)],
                                 scores[static_cast<std::size_t>(i)]});
    return dets;
}

void Detector::save(const std::string& path, nlohmann::json manifest,
                    bool with_optimizer_state) const {
    manifest["model"] = cfg_;
    nn::save_checkpoint(path, params_, manifest, with_optimizer_state);
}

nlohmann::json Detector::load(const std::string& path) {
    nlohmann::json manifest = nn::load_checkpoint(path, params_);
    const DetectorConfig stored = manifest.at("model").get<DetectorConfig>();
    nlohmann::json a, b;
    to_json(a, stored);
    to_json(b, cfg_);
    if (a != b) throw VersionError("Detector::load: checkpoint model config differs");
    return manifest;
}

}  // namespace noddet
