#pragma once

#include <vector>

#include "noddet/nn/layers.hpp"
#include "noddet/rng.hpp"

namespace noddet::heads {

// Per-ROI second-stage outputs. class_probs rows are softmax-normalized over
// {background, nodule}; logits are kept for the loss.
struct ClassifierOut {
    nn::Var class_logits;  // {R, 2}
    nn::Var class_probs;   // {R, 2}
    nn::Var deltas;        // {R, 4}, regression for the nodule class
};

inline constexpr int kBackgroundClass = 0;
inline constexpr int kNoduleClass = 1;

// Two shared hidden FC layers with ReLU and dropout, then separate
// classification and regression heads.
class ClassifierHead {
public:
    ClassifierHead() = default;
    ClassifierHead(nn::ParamStore& ps, int pyramid_channels, int pool, int fc_width,
                   double dropout_rate);

    // rois: {R, C*pool*pool} flattened pooled features
    ClassifierOut forward(nn::Graph& g, nn::Var rois, bool training, Rng& rng) const;

    int input_width() const { return input_width_; }

private:
    nn::Linear fc1_;
    nn::Linear fc2_;
    nn::Linear cls_;
    nn::Linear reg_;
    double dropout_rate_ = 0.5;
    int input_width_ = 0;
};

}  // namespace noddet::heads
