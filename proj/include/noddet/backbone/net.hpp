#pragma once

#include <array>
#include <vector>

#include "noddet/backbone/config.hpp"
#include "noddet/backbone/dpn.hpp"
#include "noddet/nn/layers.hpp"

namespace noddet::backbone {

inline constexpr std::array<int, 5> kPyramidStrides{32, 16, 8, 4, 2};

// Five decoder feature maps, coarsest (stride 32) first. anchor_scale_px is
// the single anchor scale attached to each level for RPN/ROI bookkeeping.
struct PyramidVar {
    std::array<nn::Var, 5> levels;
    std::array<int, 5> strides = kPyramidStrides;
    std::array<double, 5> anchor_scale_px{};
};

struct FeaturePyramid {
    std::array<nn::Tensor, 5> levels;
    std::array<int, 5> strides = kPyramidStrides;
    std::array<double, 5> anchor_scale_px{};
};

FeaturePyramid materialize(const PyramidVar& p);

// DPN encoder plus one of the two U-Net decoder variants.
//
// Type I levels: 2x nearest upsample of the previous level, concatenate the
// same-stride encoder skip, one keep-mode DPN block, then the extra 3x3 conv
// down to pyramid_channels.
//
// Type II replaces the parameter-free upsample with an up2 DPN block whose
// interpolated shortcut carries both streams (the dual skip connection); the
// dual stream persists across levels and each pyramid level is the extra 3x3
// conv applied to it. Skip concatenation and the extra conv mirror Type I.
class Backbone {
public:
    Backbone(nn::ParamStore& ps, const BackboneConfig& cfg);

    DualStreamVar stem(nn::Graph& g, nn::Var image, bool training) const;
    std::array<DualStreamVar, 4> encode(nn::Graph& g, nn::Var image, bool training) const;
    PyramidVar decode(nn::Graph& g, const std::array<DualStreamVar, 4>& stages,
                      bool training) const;
    PyramidVar forward(nn::Graph& g, nn::Var image, bool training) const;

    const BackboneConfig& config() const { return cfg_; }

    // Default per-level anchor scale when no anchor config is attached.
    static double default_anchor_scale(int stride) { return 4.0 * stride; }

private:
    struct DecoderLevel {
        DpnBlock up;  // type2 only
        DpnBlock keep;
        nn::Conv2d extra_conv;
        nn::BatchNorm extra_bn;
        int skip_stage = -1;  // encoder stage index supplying the skip, -1 = none
    };

    PyramidVar decode_type1(nn::Graph& g, const std::array<DualStreamVar, 4>& stages,
                            bool training) const;
    PyramidVar decode_type2(nn::Graph& g, const std::array<DualStreamVar, 4>& stages,
                            bool training) const;

    BackboneConfig cfg_;
    nn::Conv2d stem_conv_;
    nn::BatchNorm stem_bn_;
    std::array<std::vector<DpnBlock>, 4> stages_;
    nn::Conv2d lateral_conv_;  // 1x1 projection of the deepest stage
    nn::BatchNorm lateral_bn_;
    std::array<DecoderLevel, 4> decoder_;  // levels at strides 16, 8, 4, 2
};

}  // namespace noddet::backbone
