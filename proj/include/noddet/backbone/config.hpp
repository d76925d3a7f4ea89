#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace noddet::backbone {

enum class DecoderType { type1, type2 };

inline const char* to_string(DecoderType t) { return t == DecoderType::type1 ? "type1" : "type2"; }

inline DecoderType decoder_type_from_string(const std::string& s) {
    if (s == "type1") return DecoderType::type1;
    if (s == "type2") return DecoderType::type2;
    throw std::invalid_argument("decoder_type must be 'type1' or 'type2', got '" + s + "'");
}

// Stage widths follow DPN-92 conventions scaled down by 8x; all sizes are
// configurable since the original publication leaves them open.
struct BackboneConfig {
    int stem_channels = 64;
    std::array<int, 4> stage_block_counts{2, 2, 2, 2};
    std::array<int, 4> stage_residual_widths{32, 64, 128, 256};
    std::array<int, 4> dense_increment_k{8, 8, 16, 16};
    int groups = 8;
    DecoderType decoder_type = DecoderType::type2;
    int pyramid_channels = 64;

    // Bottleneck width of a block with residual width w (grouped 3x3 operates
    // at this width).
    int bottleneck_width(int residual_width) const {
        const int b = residual_width / 2;
        return b < groups ? groups : b;
    }

    // Initial dense width entering stage s (0-based). Stage 0 inherits the
    // stem channels left over after the residual split; later stages start at
    // 2k from the projection shortcut.
    int stage_dense_in(int s) const {
        return s == 0 ? stem_channels - stage_residual_widths[0] : 2 * dense_increment_k[static_cast<std::size_t>(s)];
    }

    // Channel total leaving stage s: residual + dense_in + blocks * k.
    int stage_out_channels(int s) const {
        const auto su = static_cast<std::size_t>(s);
        return stage_residual_widths[su] + stage_dense_in(s) +
               stage_block_counts[su] * dense_increment_k[su];
    }

    void validate() const {
        if (stem_channels <= 0 || pyramid_channels <= 0 || groups <= 0)
            throw std::invalid_argument("BackboneConfig: sizes must be positive");
        if (stage_residual_widths[0] >= stem_channels)
            throw std::invalid_argument(
                "BackboneConfig: stage 1 residual width must be below stem_channels");
        for (int s = 0; s < 4; ++s) {
            const auto su = static_cast<std::size_t>(s);
            if (stage_block_counts[su] < 1 || stage_residual_widths[su] < 1 ||
                dense_increment_k[su] < 1)
                throw std::invalid_argument("BackboneConfig: stage sizes must be positive");
            if (bottleneck_width(stage_residual_widths[su]) % groups != 0)
                throw std::invalid_argument(
                    "BackboneConfig: groups must divide every grouped conv width (stage " +
                    std::to_string(s + 1) + ")");
        }
        if (bottleneck_width(pyramid_channels) % groups != 0)
            throw std::invalid_argument(
                "BackboneConfig: groups must divide the decoder bottleneck width");
    }

    // Test-scale configuration; small enough for finite-difference checks.
    static BackboneConfig micro() {
        BackboneConfig c;
        c.stem_channels = 8;
        c.stage_block_counts = {1, 1, 1, 1};
        c.stage_residual_widths = {4, 4, 8, 8};
        c.dense_increment_k = {2, 2, 2, 2};
        c.groups = 2;
        c.pyramid_channels = 8;
        return c;
    }
};

void to_json(nlohmann::json& j, const BackboneConfig& c);
void from_json(const nlohmann::json& j, BackboneConfig& c);

}  // namespace noddet::backbone
