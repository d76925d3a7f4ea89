#pragma once

#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "noddet/backbone/net.hpp"
#include "noddet/heads/classifier.hpp"
#include "noddet/heads/roi.hpp"
#include "noddet/heads/rpn.hpp"
#include "noddet/targets/anchors.hpp"
#include "noddet/targets/labels.hpp"

namespace noddet {

// Proposal and detection plumbing knobs (all invented defaults, configurable).
struct ProposalConfig {
    double rpn_nms_iou = 0.7;
    int pre_nms_top = 6000;
    int post_nms_top_train = 2000;
    int post_nms_top_eval = 300;
    double detection_nms_iou = 0.3;
    double score_floor = 0.05;
    int rpn_batch = 256;
    double rpn_pos_fraction = 0.5;
    int head_batch = 64;
    double head_fg_fraction = 0.25;
    bool add_gt_proposals = true;
    double min_proposal_px = 1.0;
};

struct DetectorConfig {
    backbone::BackboneConfig backbone;
    int input_size = 512;
    std::array<double, 5> anchor_scales_px = targets::kDefaultAnchorScales;
    std::array<double, 3> anchor_ratios = targets::kDefaultAnchorRatios;
    int roi_pool = 7;
    int fc_width = 1024;
    double dropout_rate = 0.5;
    ProposalConfig proposals;

    void validate() const;
    static DetectorConfig micro();
};

void to_json(nlohmann::json& j, const DetectorConfig& c);
void from_json(const nlohmann::json& j, DetectorConfig& c);

struct ScoredBox {
    Box box;
    double score = 0.0;
};

// The full two-stage model: DPN U-Net pyramid, shared RPN, ROI Align and the
// two-head classifier, plus the anchor bookkeeping both stages share.
class Detector {
public:
    explicit Detector(const DetectorConfig& cfg);

    const DetectorConfig& config() const { return cfg_; }
    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }
    const targets::AnchorSet& anchors() const { return anchors_; }
    const backbone::Backbone& net() const { return *backbone_; }

    backbone::PyramidVar pyramid(nn::Graph& g, nn::Var image, bool training) const;
    heads::RpnOut rpn(nn::Graph& g, const backbone::PyramidVar& pyramid) const;

    // Decode + clip + NMS over RPN outputs (values only, no gradient flow).
    std::vector<ScoredBox> propose(const nn::Tensor& objectness, const nn::Tensor& deltas,
                                   bool training) const;

    // Pool the given boxes off the pyramid and run the classifier head.
    heads::ClassifierOut classify(nn::Graph& g, const backbone::PyramidVar& pyramid,
                                  const std::vector<Box>& rois, bool training, Rng& rng) const;

    // Eval-mode end-to-end inference on one normalized {3,S,S} image.
    std::vector<ScoredBox> detect(const nn::Tensor& image) const;

    void save(const std::string& path, nlohmann::json manifest, bool with_optimizer_state) const;
    nlohmann::json load(const std::string& path);

private:
    DetectorConfig cfg_;
    nn::ParamStore params_;
    std::unique_ptr<backbone::Backbone> backbone_;
    heads::RpnHead rpn_head_;
    heads::ClassifierHead classifier_;
    targets::AnchorSet anchors_;
};

}  // namespace noddet
