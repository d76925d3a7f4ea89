#include "noddet/backbone/dpn.hpp"

#include <stdexcept>

namespace noddet::backbone {

using nn::Graph;
using nn::Var;

DpnBlock::DpnBlock(nn::ParamStore& ps, const std::string& name, SpatialMode mode, int in_res,
                   int in_dense, int out_res, int k, int bottleneck, int groups)
    : mode_(mode), in_res_(in_res), in_dense_(in_dense), out_res_(out_res), k_(k) {
    if (bottleneck % groups != 0)
        throw std::invalid_argument("DpnBlock: groups must divide bottleneck width");
    const int in_total = in_res + in_dense;
    conv1_ = nn::Conv2d(ps, name + ".conv1", in_total, bottleneck, 1, 1, 0, 1, false);
    bn1_ = nn::BatchNorm(ps, name + ".bn1", bottleneck);
    if (mode == SpatialMode::up2) {
        deconv2_ = nn::ConvTranspose2x(ps, name + ".deconv2", bottleneck, bottleneck, groups);
    } else {
        conv2_ = nn::Conv2d(ps, name + ".conv2", bottleneck, bottleneck, 3,
                            mode == SpatialMode::down2 ? 2 : 1, 1, groups, false);
    }
    bn2_ = nn::BatchNorm(ps, name + ".bn2", bottleneck);
    conv3_ = nn::Conv2d(ps, name + ".conv3", bottleneck, out_res + k, 1, 1, 0, 1, false);
    bn3_ = nn::BatchNorm(ps, name + ".bn3", out_res + k);

    if (mode == SpatialMode::down2) {
        shortcut_proj_ = nn::Conv2d(ps, name + ".shortcut", in_total, out_res + 2 * k, 1, 2, 0, 1,
                                    false);
        has_shortcut_proj_ = true;
    } else if (mode == SpatialMode::up2 && in_res != out_res) {
        shortcut_proj_ = nn::Conv2d(ps, name + ".shortcut", in_res, out_res, 1, 1, 0, 1, false);
        has_shortcut_proj_ = true;
    } else if (mode == SpatialMode::keep && in_res != out_res) {
        throw std::invalid_argument("DpnBlock: keep mode requires matching residual widths");
    }
}

DualStreamVar DpnBlock::forward(Graph& g, const DualStreamVar& x, bool training) const {
    if (x.residual_ch() != in_res_ || x.dense_ch() != in_dense_)
        throw std::invalid_argument("DpnBlock: input stream widths do not match block");

    Var t = x.merged(g);
    t = g.relu(bn1_.forward(g, conv1_.forward(g, t), training));
    t = mode_ == SpatialMode::up2 ? deconv2_.forward(g, t) : conv2_.forward(g, t);
    t = g.relu(bn2_.forward(g, t, training));
    t = bn3_.forward(g, conv3_.forward(g, t), training);

    Var f_res = g.slice_ch(t, 0, out_res_);
    Var f_dense = g.slice_ch(t, out_res_, out_res_ + k_);

    Var sc_res;
    Var sc_dense;
    switch (mode_) {
        case SpatialMode::keep:
            sc_res = x.residual;
            sc_dense = x.dense;
            break;
        case SpatialMode::down2: {
            Var proj = shortcut_proj_.forward(g, x.merged(g));
            sc_res = g.slice_ch(proj, 0, out_res_);
            sc_dense = g.slice_ch(proj, out_res_, out_res_ + 2 * k_);
            break;
        }
        case SpatialMode::up2: {
            sc_res = g.upsample2_nearest(x.residual);
            if (has_shortcut_proj_) sc_res = shortcut_proj_.forward(g, sc_res);
            if (x.dense.valid()) sc_dense = g.upsample2_nearest(x.dense);
            break;
        }
    }

    DualStreamVar out;
    out.residual = g.relu(g.add(sc_res, f_res));
    out.dense = sc_dense.valid() ? g.concat_ch({sc_dense, f_dense}) : f_dense;
    return out;
}

}  // namespace noddet::backbone
