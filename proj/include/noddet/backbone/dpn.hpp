#pragma once

#include <string>

#include "noddet/nn/layers.hpp"

namespace noddet::backbone {

// Parallel residual/dense feature streams sharing one spatial grid. The dense
// stream may be empty (dense_ch == 0).
struct DualStreamVar {
    nn::Var residual;
    nn::Var dense;  // invalid when dense_ch == 0

    int residual_ch() const { return residual.val().dim(0); }
    int dense_ch() const { return dense.valid() ? dense.val().dim(0) : 0; }
    int total_ch() const { return residual_ch() + dense_ch(); }

    nn::Var merged(nn::Graph& g) const {
        if (!dense.valid()) return residual;
        return g.concat_ch({residual, dense});
    }
};

enum class SpatialMode { keep, down2, up2 };

// Dual path bottleneck. Transform: 1x1 -> BN/ReLU -> grouped 3x3 (strided for
// down2, transposed for up2) -> BN/ReLU -> 1x1 -> BN, emitting out_res + k
// channels. The first out_res channels are added to the shortcut's residual
// stream, the trailing k are appended to its dense stream, and the residual
// sum passes through a final ReLU.
//
// Shortcuts: keep = identity (widths must match); down2 = strided 1x1
// projection to out_res + 2k; up2 = parameter-free 2x nearest interpolation,
// with a 1x1 projection of the residual part only if widths differ.
class DpnBlock {
public:
    DpnBlock() = default;
    DpnBlock(nn::ParamStore& ps, const std::string& name, SpatialMode mode, int in_res,
             int in_dense, int out_res, int k, int bottleneck, int groups);

    DualStreamVar forward(nn::Graph& g, const DualStreamVar& x, bool training) const;

    int out_res() const { return out_res_; }
    int k() const { return k_; }

private:
    SpatialMode mode_ = SpatialMode::keep;
    int in_res_ = 0, in_dense_ = 0, out_res_ = 0, k_ = 0;

    nn::Conv2d conv1_;
    nn::BatchNorm bn1_;
    nn::Conv2d conv2_;             // keep/down2
    nn::ConvTranspose2x deconv2_;  // up2
    nn::BatchNorm bn2_;
    nn::Conv2d conv3_;
    nn::BatchNorm bn3_;
    nn::Conv2d shortcut_proj_;  // down2 always; up2 only when widths differ
    bool has_shortcut_proj_ = false;
};

}  // namespace noddet::backbone
