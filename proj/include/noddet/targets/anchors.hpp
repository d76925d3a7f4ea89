#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "noddet/box.hpp"

namespace noddet::targets {

// All anchors over the five pyramid levels in canonical flat order:
// level (coarsest first), then y, x, anchor-within-cell. One scale per level,
// three aspect ratios per cell. Anchors may extend beyond the image; clipping
// happens only at proposal time.
struct AnchorSet {
    std::vector<Box> boxes;
    std::vector<int> level_of;           // anchor index -> level
    std::array<double, 5> scales_px{};
    std::array<double, 3> ratios{};
    std::array<int, 5> strides{};
    std::array<int, 5> grid_h{};
    std::array<int, 5> grid_w{};
    std::array<std::int64_t, 5> level_offset{};  // first flat index of each level

    std::int64_t size() const { return static_cast<std::int64_t>(boxes.size()); }

    // Canonical flat index of (level, y, x, a).
    std::int64_t flat_index(int level, int y, int x, int a) const {
        const auto lu = static_cast<std::size_t>(level);
        return level_offset[lu] +
               (static_cast<std::int64_t>(y) * grid_w[lu] + x) * 3 + a;
    }
};

inline constexpr std::array<double, 5> kDefaultAnchorScales{128.0, 64.0, 32.0, 16.0, 8.0};
inline constexpr std::array<double, 3> kDefaultAnchorRatios{0.5, 1.0, 2.0};

// Anchor centered at ((x+.5)*stride, (y+.5)*stride) with width scale*sqrt(r)
// and height scale/sqrt(r).
AnchorSet generate_anchors(int image_size, const std::array<int, 5>& strides,
                           const std::array<double, 5>& scales_px,
                           const std::array<double, 3>& ratios);

}  // namespace noddet::targets
