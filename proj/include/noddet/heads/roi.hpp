#pragma once

#include "noddet/backbone/net.hpp"
#include "noddet/box.hpp"
#include "noddet/nn/autograd.hpp"

namespace noddet::heads {

// Level whose anchor scale is nearest to sqrt(box area); ties go to the
// coarser level (lower index in coarsest-first storage).
int assign_roi_level(const Box& box, const std::array<double, 5>& anchor_scale_px);

// ROI Align against the assigned pyramid level: image-space box divided by
// stride (no rounding), pool x pool bins, 2x2 bilinear samples per bin.
nn::Var roi_align_on_pyramid(nn::Graph& g, const backbone::PyramidVar& pyramid, const Box& box,
                             int pool);

}  // namespace noddet::heads
