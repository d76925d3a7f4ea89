#pragma once

#include <array>
#include <string>

#include "noddet/backbone/net.hpp"
#include "noddet/nn/layers.hpp"

namespace noddet::heads {

inline constexpr int kAnchorsPerCell = 3;  // three ratios, one scale per level

// Flat RPN predictions over every anchor, in the canonical
// (level coarsest-to-finest, y, x, anchor) order shared with AnchorSet.
struct RpnOut {
    nn::Var objectness;  // {A}
    nn::Var deltas;      // {A, 4}
};

// One shared 3x3 conv + ReLU, then 1x1 heads emitting 3 objectness logits and
// 12 regression values per location. Head parameters are shared across all
// five pyramid levels.
class RpnHead {
public:
    RpnHead() = default;
    RpnHead(nn::ParamStore& ps, int pyramid_channels);

    RpnOut forward(nn::Graph& g, const backbone::PyramidVar& pyramid) const;

private:
    nn::Conv2d conv_;
    nn::Conv2d obj_;
    nn::Conv2d delta_;
};

// Reorders a {3, H, W} per-level score map into the canonical flat layout.
nn::Var flatten_anchor_scores(nn::Graph& g, nn::Var map3);
// Reorders a {12, H, W} per-level delta map into {3*H*W, 4}.
nn::Var flatten_anchor_deltas(nn::Graph& g, nn::Var map12);

}  // namespace noddet::heads
