#include "noddet/backbone/net.hpp"

#include <stdexcept>

namespace noddet::backbone {

using nn::Graph;
using nn::Var;

void to_json(nlohmann::json& j, const BackboneConfig& c) {
    j = nlohmann::json{{"stem_channels", c.stem_channels},
                       {"stage_block_counts", c.stage_block_counts},
                       {"stage_residual_widths", c.stage_residual_widths},
                       {"dense_increment_k", c.dense_increment_k},
                       {"groups", c.groups},
                       {"decoder_type", to_string(c.decoder_type)},
                       {"pyramid_channels", c.pyramid_channels}};
}

void from_json(const nlohmann::json& j, BackboneConfig& c) {
    j.at("stem_channels").get_to(c.stem_channels);
    j.at("stage_block_counts").get_to(c.stage_block_counts);
    j.at("stage_residual_widths").get_to(c.stage_residual_widths);
    j.at("dense_increment_k").get_to(c.dense_increment_k);
    j.at("groups").get_to(c.groups);
    c.decoder_type = decoder_type_from_string(j.at("decoder_type").get<std::string>());
    j.at("pyramid_channels").get_to(c.pyramid_channels);
}

FeaturePyramid materialize(const PyramidVar& p) {
    FeaturePyramid out;
    for (int i = 0; i < 5; ++i) out.levels[static_cast<std::size_t>(i)] = p.levels[static_cast<std::size_t>(i)].val();
    out.strides = p.strides;
    out.anchor_scale_px = p.anchor_scale_px;
    return out;
}

namespace {

// k for decoder level l (0..3 at strides 16, 8, 4, 2): the matching encoder
// stage's increment; the stride-2 level reuses the finest stage's.
int decoder_k(const BackboneConfig& cfg, int level) {
    static constexpr int stage_of_level[4] = {2, 1, 0, 0};
    return cfg.dense_increment_k[static_cast<std::size_t>(stage_of_level[level])];
}

}  // namespace

Backbone::Backbone(nn::ParamStore& ps, const BackboneConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    stem_conv_ = nn::Conv2d(ps, "backbone.stem.conv", 3, cfg_.stem_channels, 7, 2, 3, 1, false);
    stem_bn_ = nn::BatchNorm(ps, "backbone.stem.bn", cfg_.stem_channels);

    int in_res = cfg_.stage_residual_widths[0];
    int in_dense = cfg_.stem_channels - in_res;
    for (int s = 0; s < 4; ++s) {
        const auto su = static_cast<std::size_t>(s);
        const int out_res = cfg_.stage_residual_widths[su];
        const int k = cfg_.dense_increment_k[su];
        const int bneck = cfg_.bottleneck_width(out_res);
        for (int b = 0; b < cfg_.stage_block_counts[su]; ++b) {
            const SpatialMode mode = (s > 0 && b == 0) ? SpatialMode::down2 : SpatialMode::keep;
            const std::string name =
                "backbone.stage" + std::to_string(s + 1) + ".block" + std::to_string(b + 1);
            stages_[su].emplace_back(ps, name, mode, in_res, in_dense, out_res, k, bneck,
                                     cfg_.groups);
            in_res = out_res;
            in_dense = mode == SpatialMode::down2 ? 3 * k : in_dense + k;
        }
    }

    const int deep_ch = cfg_.stage_out_channels(3);
    const int P = cfg_.pyramid_channels;
    lateral_conv_ = nn::Conv2d(ps, "backbone.decoder.lateral", deep_ch, P, 1, 1, 0, 1, false);
    lateral_bn_ = nn::BatchNorm(ps, "backbone.decoder.lateral_bn", P);

    const int dec_bneck = cfg_.bottleneck_width(P);
    int stream_dense = 0;  // type2 carries a growing dense stream across levels
    for (int l = 0; l < 4; ++l) {
        const auto lu = static_cast<std::size_t>(l);
        DecoderLevel& dl = decoder_[lu];
        dl.skip_stage = l < 3 ? 2 - l : -1;
        const int skip_ch = dl.skip_stage >= 0 ? cfg_.stage_out_channels(dl.skip_stage) : 0;
        const int k = decoder_k(cfg_, l);
        const std::string name = "backbone.decoder.level" + std::to_string(l + 1);
        if (cfg_.decoder_type == DecoderType::type2) {
            dl.up = DpnBlock(ps, name + ".up", SpatialMode::up2, P, stream_dense, P, k, dec_bneck,
                             cfg_.groups);
            const int dense_after_up = stream_dense + k;
            dl.keep = DpnBlock(ps, name + ".block", SpatialMode::keep, P, dense_after_up + skip_ch,
                               P, k, dec_bneck, cfg_.groups);
            stream_dense = dense_after_up + skip_ch + k;
            dl.extra_conv = nn::Conv2d(ps, name + ".extra", P + stream_dense, P, 3, 1, 1, 1, false);
        } else {
            dl.keep = DpnBlock(ps, name + ".block", SpatialMode::keep, P, skip_ch, P, k, dec_bneck,
                               cfg_.groups);
            dl.extra_conv = nn::Conv2d(ps, name + ".extra", P + skip_ch + k, P, 3, 1, 1, 1, false);
        }
        dl.extra_bn = nn::BatchNorm(ps, name + ".extra_bn", P);
    }
}

DualStreamVar Backbone::stem(Graph& g, Var image, bool training) const {
    const nn::Tensor& t = image.val();
    if (t.ndim() != 3 || t.dim(0) != 3) throw std::invalid_argument("stem: expects 3xHxW image");
    if (t.dim(1) % 32 != 0 || t.dim(2) % 32 != 0)
        throw std::invalid_argument("stem: image size must be divisible by 32");
    Var x = stem_conv_.forward(g, image);
    x = g.relu(stem_bn_.forward(g, x, training));
    x = g.maxpool3x3s2(x);
    const int split = cfg_.stage_residual_widths[0];
    DualStreamVar out;
    out.residual = g.slice_ch(x, 0, split);
    out.dense = g.slice_ch(x, split, cfg_.stem_channels);
    return out;
}

std::array<DualStreamVar, 4> Backbone::encode(Graph& g, Var image, bool training) const {
    std::array<DualStreamVar, 4> out;
    DualStreamVar x = stem(g, image, training);
    for (int s = 0; s < 4; ++s) {
        for (const DpnBlock& block : stages_[static_cast<std::size_t>(s)])
            x = block.forward(g, x, training);
        out[static_cast<std::size_t>(s)] = x;
    }
    return out;
}

PyramidVar Backbone::decode(Graph& g, const std::array<DualStreamVar, 4>& stages,
                            bool training) const {
    return cfg_.decoder_type == DecoderType::type1 ? decode_type1(g, stages, training)
                                                   : decode_type2(g, stages, training);
}

PyramidVar Backbone::decode_type1(Graph& g, const std::array<DualStreamVar, 4>& stages,
                                  bool training) const {
    PyramidVar pyr;
    for (int i = 0; i < 5; ++i)
        pyr.anchor_scale_px[static_cast<std::size_t>(i)] =
            default_anchor_scale(kPyramidStrides[static_cast<std::size_t>(i)]);

    Var level = g.relu(lateral_bn_.forward(g, lateral_conv_.forward(g, stages[3].merged(g)), training));
    pyr.levels[0] = level;
    for (int l = 0; l < 4; ++l) {
        const DecoderLevel& dl = decoder_[static_cast<std::size_t>(l)];
        DualStreamVar stream;
        stream.residual = g.upsample2_nearest(level);
        if (dl.skip_stage >= 0)
            stream.dense = stages[static_cast<std::size_t>(dl.skip_stage)].merged(g);
        stream = dl.keep.forward(g, stream, training);
        level = g.relu(dl.extra_bn.forward(g, dl.extra_conv.forward(g, stream.merged(g)), training));
        pyr.levels[static_cast<std::size_t>(l + 1)] = level;
    }
    return pyr;
}

PyramidVar Backbone::decode_type2(Graph& g, const std::array<DualStreamVar, 4>& stages,
                                  bool training) const {
    PyramidVar pyr;
    for (int i = 0; i < 5; ++i)
        pyr.anchor_scale_px[static_cast<std::size_t>(i)] =
            default_anchor_scale(kPyramidStrides[static_cast<std::size_t>(i)]);

    DualStreamVar stream;
    stream.residual =
        g.relu(lateral_bn_.forward(g, lateral_conv_.forward(g, stages[3].merged(g)), training));
    pyr.levels[0] = stream.residual;
    for (int l = 0; l < 4; ++l) {
        const DecoderLevel& dl = decoder_[static_cast<std::size_t>(l)];
        stream = dl.up.forward(g, stream, training);
        if (dl.skip_stage >= 0) {
            Var skip = stages[static_cast<std::size_t>(dl.skip_stage)].merged(g);
            stream.dense = stream.dense.valid() ? g.concat_ch({stream.dense, skip}) : skip;
        }
        stream = dl.keep.forward(g, stream, training);
        pyr.levels[static_cast<std::size_t>(l + 1)] =
            g.relu(dl.extra_bn.forward(g, dl.extra_conv.forward(g, stream.merged(g)), training));
    }
    return pyr;
}

PyramidVar Backbone::forward(Graph& g, Var image, bool training) const {
    return decode(g, encode(g, image, training), training);
}

}  // namespace noddet::backbone
