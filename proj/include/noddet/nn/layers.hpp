#pragma once

#include <string>

#include "noddet/nn/autograd.hpp"
#include "noddet/nn/params.hpp"

namespace noddet::nn {

// Parameter-owning layer handles. Construction registers named entries in the
// store; forward binds them into the current graph. Convs that feed a batch
// norm are built without bias.
struct Conv2d {
    Parameter* w = nullptr;
    Parameter* b = nullptr;
    int stride = 1, pad = 0, groups = 1;

    Conv2d() = default;
    Conv2d(ParamStore& ps, const std::string& name, int in_ch, int out_ch, int k, int stride_,
           int pad_, int groups_ = 1, bool bias = true)
        : stride(stride_), pad(pad_), groups(groups_) {
        w = &ps.create(name + ".weight", ParamKind::kernel, {out_ch, in_ch / groups_, k, k});
        if (bias) b = &ps.create(name + ".bias", ParamKind::bias, {out_ch});
    }

    Var forward(Graph& g, Var x) const {
        Var bv = b ? g.param(*b) : Var{};
        return g.conv2d(x, g.param(*w), bv, stride, pad, groups);
    }
};

// Fixed 2x upscaling transposed conv (3x3, stride 2).
struct ConvTranspose2x {
    Parameter* w = nullptr;
    int groups = 1;

    ConvTranspose2x() = default;
    ConvTranspose2x(ParamStore& ps, const std::string& name, int in_ch, int out_ch, int groups_)
        : groups(groups_) {
        w = &ps.create(name + ".weight", ParamKind::kernel, {in_ch, out_ch / groups_, 3, 3});
    }

    Var forward(Graph& g, Var x) const {
        return g.conv2d_transpose2x(x, g.param(*w), Var{}, groups);
    }
};

struct BatchNorm {
    Parameter* gamma = nullptr;
    Parameter* beta = nullptr;
    BatchNormState state;

    BatchNorm() = default;
    BatchNorm(ParamStore& ps, const std::string& name, int ch) {
        gamma = &ps.create(name + ".scale", ParamKind::bn_scale, {ch}, 1.0);
        beta = &ps.create(name + ".shift", ParamKind::bn_shift, {ch});
        state.running_mean = &ps.create(name + ".running_mean", ParamKind::bn_state, {ch});
        state.running_var = &ps.create(name + ".running_var", ParamKind::bn_state, {ch}, 1.0);
    }

    Var forward(Graph& g, Var x, bool training) const {
        return g.batchnorm(x, g.param(*gamma), g.param(*beta), state, training);
    }
};

struct Linear {
    Parameter* w = nullptr;
    Parameter* b = nullptr;

    Linear() = default;
    Linear(ParamStore& ps, const std::string& name, int in_dim, int out_dim) {
        w = &ps.create(name + ".weight", ParamKind::kernel, {out_dim, in_dim});
        b = &ps.create(name + ".bias", ParamKind::bias, {out_dim});
    }

    Var forward(Graph& g, Var x) const { return g.linear(x, g.param(*w), g.param(*b)); }
};

}  // namespace noddet::nn
