#include "noddet/heads/roi.hpp"

#include <cmath>

namespace noddet::heads {

int assign_roi_level(const Box& box, const std::array<double, 5>& anchor_scale_px) {
    box.require_valid("assign_roi_level");
    const double side = std::sqrt(box.area());
    int best = 0;
    double best_d = std::abs(side - anchor_scale_px[0]);
    for (int l = 1; l < 5; ++l) {
        const double d = std::abs(side - anchor_scale_px[static_cast<std::size_t>(l)]);
        if (d < best_d) {  // strict: ties keep the coarser (earlier) level
            best = l;
            best_d = d;
        }
    }
    return best;
}

nn::Var roi_align_on_pyramid(nn::Graph& g, const backbone::PyramidVar& pyramid, const Box& box,
                             int pool) {
    const int level = assign_roi_level(box, pyramid.anchor_scale_px);
    const double stride = pyramid.strides[static_cast<std::size_t>(level)];
    const Box fbox{box.x1 / stride, box.y1 / stride, box.x2 / stride, box.y2 / stride};
    return g.roi_align(pyramid.levels[static_cast<std::size_t>(level)], fbox, pool);
}

}  // namespace noddet::heads
