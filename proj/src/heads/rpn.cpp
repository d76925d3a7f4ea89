#include "noddet/heads/rpn.hpp"

#include <stdexcept>

namespace noddet::heads {

using nn::Graph;
using nn::Var;

RpnHead::RpnHead(nn::ParamStore& ps, int pyramid_channels) {
    conv_ = nn::Conv2d(ps, "rpn.conv", pyramid_channels, pyramid_channels, 3, 1, 1, 1, true);
    obj_ = nn::Conv2d(ps, "rpn.objectness", pyramid_channels, kAnchorsPerCell, 1, 1, 0, 1, true);
    delta_ = nn::Conv2d(ps, "rpn.deltas", pyramid_channels, 4 * kAnchorsPerCell, 1, 1, 0, 1, true);
}

Var flatten_anchor_scores(Graph& g, Var map3) {
    const nn::Tensor& t = map3.val();
    if (t.ndim() != 3 || t.dim(0) != kAnchorsPerCell)
        throw std::invalid_argument("flatten_anchor_scores: expects {3, H, W}");
    const int H = t.dim(1), W = t.dim(2);
    const std::int64_t plane = static_cast<std::int64_t>(H) * W;
    std::vector<std::int64_t> idx;
    idx.reserve(static_cast<std::size_t>(kAnchorsPerCell) * plane);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int a = 0; a < kAnchorsPerCell; ++a)
                idx.push_back(a * plane + static_cast<std::int64_t>(y) * W + x);
    return g.permute_flat(map3, std::move(idx), {kAnchorsPerCell * H * W});
}

Var flatten_anchor_deltas(Graph& g, Var map12) {
    const nn::Tensor& t = map12.val();
    if (t.ndim() != 3 || t.dim(0) != 4 * kAnchorsPerCell)
        throw std::invalid_argument("flatten_anchor_deltas: expects {12, H, W}");
    const int H = t.dim(1), W = t.dim(2);
    const std::int64_t plane = static_cast<std::int64_t>(H) * W;
    std::vector<std::int64_t> idx;
    idx.reserve(static_cast<std::size_t>(4 * kAnchorsPerCell) * plane);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int a = 0; a < kAnchorsPerCell; ++a)
                for (int d = 0; d < 4; ++d)
                    idx.push_back((static_cast<std::int64_t>(a) * 4 + d) * plane +
                                  static_cast<std::int64_t>(y) * W + x);
    return g.permute_flat(map12, std::move(idx), {kAnchorsPerCell * H * W, 4});
}

RpnOut RpnHead::forward(Graph& g, const backbone::PyramidVar& pyramid) const {
    std::vector<Var> scores;
    std::vector<Var> deltas;
    for (const Var& level : pyramid.levels) {
        Var shared = g.relu(conv_.forward(g, level));
        scores.push_back(flatten_anchor_scores(g, obj_.forward(g, shared)));
        deltas.push_back(flatten_anchor_deltas(g, delta_.forward(g, shared)));
    }
    return RpnOut{g.concat_rows(scores), g.concat_rows(deltas)};
}

}  // namespace noddet::heads
