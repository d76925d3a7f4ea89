#pragma once

#include <vector>

#include "noddet/data/types.hpp"
#include "noddet/rng.hpp"

namespace noddet::data {

// Relative attenuation of one HU value: 1 + HU/1000 clipped at zero
// (water-referenced linear map; air lands exactly on 0).
inline double hu_to_attenuation(double hu) {
    const double a = 1.0 + hu / 1000.0;
    return a < 0.0 ? 0.0 : a;
}

// Per-pixel attenuation divided by the dataset's 99th percentile.
nn::Tensor normalize_hu(const RawSlice& slice, double p99);

// Nearest-rank 99th percentile of attenuation values pooled over all slices.
double dataset_percentile_99(const std::vector<RawSlice>& slices);

// Channels (key-1, key, key+1) of an already-normalized volume; missing
// neighbors at volume boundaries are replaced by the key slice.
SliceStack make_slice_stack(const std::vector<nn::Tensor>& volume, int key,
                            std::vector<Box> boxes);

// Bilinear resample to target x target with box coordinates rescaled.
SliceStack resize_with_boxes(const SliceStack& stack, int target);

// Three independent 50% coins: horizontal flip, vertical flip, rotation by a
// multiple of 90 degrees (uniform over 90/180/270). Boxes follow the pixels.
SliceStack augment(const SliceStack& stack, Rng& rng);

}  // namespace noddet::data
