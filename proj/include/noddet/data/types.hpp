#pragma once

#include <array>
#include <string>
#include <vector>

#include "noddet/box.hpp"
#include "noddet/nn/tensor.hpp"

namespace noddet::data {

// One CT slice in Hounsfield units.
struct RawSlice {
    nn::Tensor pixels;  // {H, W}
    std::array<double, 2> spacing_mm{1.0, 1.0};
    int slice_index = 0;

    void validate() const;
};

// Normalized 2.5D training sample: the key slice with its two neighbors as
// channels, plus the key slice's ground-truth boxes.
struct SliceStack {
    nn::Tensor pixels;  // {3, H, W}, values >= 0
    std::vector<Box> boxes;
    std::string key_slice_id;

    int height() const { return pixels.dim(1); }
    int width() const { return pixels.dim(2); }
    void validate() const;
};

enum class LesionType { nodule };

inline const char* to_string(LesionType t) {
    (void)t;
    return "nodule";
}

struct AnnotationRecord {
    std::string study_id;
    int key_slice_id = 0;
    Box box;
    LesionType lesion_type = LesionType::nodule;
};

struct PhantomConfig {
    int n_volumes = 8;
    int image_size = 512;
    int n_slices = 8;
    std::array<int, 2> nodules_per_volume{1, 2};
    std::array<double, 2> nodule_radius_px{8.0, 24.0};
    double distractor_density = 1.0;
    std::uint64_t seed = 7;

    void validate() const;
};

struct Volume {
    std::string study_id;
    std::vector<nn::Tensor> slices;  // HU values, {H, W} each
    std::array<double, 2> spacing_mm{1.0, 1.0};
};

}  // namespace noddet::data
