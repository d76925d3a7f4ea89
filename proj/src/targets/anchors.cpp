#include "noddet/targets/anchors.hpp"

#include <cmath>
#include <stdexcept>

namespace noddet::targets {

AnchorSet generate_anchors(int image_size, const std::array<int, 5>& strides,
                           const std::array<double, 5>& scales_px,
                           const std::array<double, 3>& ratios) {
    if (image_size <= 0) throw std::invalid_argument("generate_anchors: image_size must be > 0");
    for (int s : strides)
        if (s <= 0 || image_size % s != 0)
            throw std::invalid_argument("generate_anchors: strides must divide image size");

    AnchorSet out;
    out.scales_px = scales_px;
    out.ratios = ratios;
    out.strides = strides;

    std::int64_t total = 0;
    for (int l = 0; l < 5; ++l) {
        const auto lu = static_cast<std::size_t>(l);
        out.grid_h[lu] = image_size / strides[lu];
        out.grid_w[lu] = image_size / strides[lu];
        out.level_offset[lu] = total;
        total += static_cast<std::int64_t>(out.grid_h[lu]) * out.grid_w[lu] * 3;
    }
    out.boxes.reserve(static_cast<std::size_t>(total));
    out.level_of.reserve(static_cast<std::size_t>(total));

    for (int l = 0; l < 5; ++l) {
        const auto lu = static_cast<std::size_t>(l);
        const double stride = strides[lu];
        const double scale = scales_px[lu];
        for (int y = 0; y < out.grid_h[lu]; ++y)
            for (int x = 0; x < out.grid_w[lu]; ++x) {
                const double cx = (x + 0.5) * stride;
                const double cy = (y + 0.5) * stride;
                for (double r : ratios) {
                    const double w = scale * std::sqrt(r);
                    const double h = scale / std::sqrt(r);
                    out.boxes.push_back(Box::from_center(cx, cy, w, h));
                    out.level_of.push_back(l);
                }
            }
    }
    return out;
}

}  // namespace noddet::targets
