#include "noddet/data/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace noddet::data {

void RawSlice::validate() const {
    if (pixels.ndim() != 2) throw std::invalid_argument("RawSlice: pixels must be 2-d");
    if (spacing_mm[0] <= 0.0 || spacing_mm[1] <= 0.0)
        throw std::invalid_argument("RawSlice: spacing must be positive");
    if (slice_index < 0) throw std::invalid_argument("RawSlice: negative slice index");
    for (double v : pixels.v)
        if (v < -1024.0 || v > 3071.0)
            throw std::invalid_argument("RawSlice: HU value outside [-1024, 3071]");
}

void SliceStack::validate() const {
    if (pixels.ndim() != 3 || pixels.dim(0) != 3)
        throw std::invalid_argument("SliceStack: pixels must be {3, H, W}");
    for (double v : pixels.v)
        if (v < 0.0) throw std::invalid_argument("SliceStack: negative normalized value");
    for (const Box& b : boxes) {
        b.require_valid("SliceStack box");
        if (b.x1 < 0.0 || b.y1 < 0.0 || b.x2 > width() || b.y2 > height())
            throw std::invalid_argument("SliceStack: box outside image");
    }
}

nn::Tensor normalize_hu(const RawSlice& slice, double p99) {
    if (p99 <= 0.0) throw std::invalid_argument("normalize_hu: p99 must be > 0");
    nn::Tensor out(slice.pixels.shape);
    for (std::int64_t i = 0; i < out.numel(); ++i)
        out.at(i) = hu_to_attenuation(slice.pixels.at(i)) / p99;
    return out;
}

double dataset_percentile_99(const std::vector<RawSlice>& slices) {
    if (slices.empty()) throw std::invalid_argument("dataset_percentile_99: empty dataset");
    std::vector<double> pool;
    std::size_t total = 0;
    for (const RawSlice& s : slices) total += s.pixels.v.size();
    if (total == 0) throw std::invalid_argument("dataset_percentile_99: no pixels");
    pool.reserve(total);
    for (const RawSlice& s : slices)
        for (double v : s.pixels.v) pool.push_back(hu_to_attenuation(v));
    // nearest-rank: ceil(0.99 * N)-th smallest (1-based)
    const auto rank = static_cast<std::size_t>(
        std::ceil(0.99 * static_cast<double>(pool.size())));
    const std::size_t idx = rank == 0 ? 0 : rank - 1;
    std::nth_element(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(idx), pool.end());
    return pool[idx];
}

SliceStack make_slice_stack(const std::vector<nn::Tensor>& volume, int key,
                            std::vector<Box> boxes) {
    if (volume.empty()) throw std::invalid_argument("make_slice_stack: empty volume");
    const int n = static_cast<int>(volume.size());
    if (key < 0 || key >= n) throw std::invalid_argument("make_slice_stack: key out of range");
    const nn::Tensor& keyslice = volume[static_cast<std::size_t>(key)];
    const int H = keyslice.dim(0), W = keyslice.dim(1);
    const int prev = key > 0 ? key - 1 : key;
    const int next = key < n - 1 ? key + 1 : key;

    SliceStack out;
    out.pixels = nn::Tensor({3, H, W});
    const nn::Tensor* chans[3] = {&volume[static_cast<std::size_t>(prev)], &keyslice,
                                  &volume[static_cast<std::size_t>(next)]};
    const std::int64_t plane = static_cast<std::int64_t>(H) * W;
    for (int c = 0; c < 3; ++c) {
        if (chans[c]->dim(0) != H || chans[c]->dim(1) != W)
            throw std::invalid_argument("make_slice_stack: slice size mismatch");
        std::copy(chans[c]->v.begin(), chans[c]->v.end(), out.pixels.v.begin() + c * plane);
    }
    out.boxes = std::move(boxes);
    return out;
}

namespace {

// Bilinear sample with half-pixel centers; clamped at borders so constants
// are preserved exactly.
double sample_bilinear(const nn::Tensor& img, int c, double y, double x) {
    const int H = img.dim(1), W = img.dim(2);
    const double yc = std::clamp(y, 0.0, static_cast<double>(H - 1));
    const double xc = std::clamp(x, 0.0, static_cast<double>(W - 1));
    const int y0 = static_cast<int>(std::floor(yc));
    const int x0 = static_cast<int>(std::floor(xc));
    const int y1 = std::min(y0 + 1, H - 1);
    const int x1 = std::min(x0 + 1, W - 1);
    const double fy = yc - y0;
    const double fx = xc - x0;
    return (1 - fy) * ((1 - fx) * img.at(c, y0, x0) + fx * img.at(c, y0, x1)) +
           fy * ((1 - fx) * img.at(c, y1, x0) + fx * img.at(c, y1, x1));
}

}  // namespace

SliceStack resize_with_boxes(const SliceStack& stack, int target) {
    if (target <= 0) throw std::invalid_argument("resize_with_boxes: target must be > 0");
    const int H = stack.height(), W = stack.width();
    SliceStack out;
    out.key_slice_id = stack.key_slice_id;
    if (H == target && W == target) {
        out.pixels = stack.pixels;
        out.boxes = stack.boxes;
        return out;
    }
    out.pixels = nn::Tensor({3, target, target});
    const double sy = static_cast<double>(H) / target;
    const double sx = static_cast<double>(W) / target;
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < target; ++y)
            for (int x = 0; x < target; ++x)
                out.pixels.at(c, y, x) =
                    sample_bilinear(stack.pixels, c, (y + 0.5) * sy - 0.5, (x + 0.5) * sx - 0.5);
    out.boxes.reserve(stack.boxes.size());
    for (const Box& b : stack.boxes)
        out.boxes.push_back(Box{b.x1 * target / W, b.y1 * target / H, b.x2 * target / W,
                                b.y2 * target / H});
    return out;
}

namespace {

SliceStack hflip(const SliceStack& s) {
    const int H = s.height(), W = s.width();
    SliceStack out;
    out.key_slice_id = s.key_slice_id;
    out.pixels = nn::Tensor({3, H, W});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) out.pixels.at(c, y, x) = s.pixels.at(c, y, W - 1 - x);
    for (const Box& b : s.boxes) out.boxes.push_back(Box{W - b.x2, b.y1, W - b.x1, b.y2});
    return out;
}

SliceStack vflip(const SliceStack& s) {
    const int H = s.height(), W = s.width();
    SliceStack out;
    out.key_slice_id = s.key_slice_id;
    out.pixels = nn::Tensor({3, H, W});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) out.pixels.at(c, y, x) = s.pixels.at(c, H - 1 - y, x);
    for (const Box& b : s.boxes) out.boxes.push_back(Box{b.x1, H - b.y2, b.x2, H - b.y1});
    return out;
}

// counter-clockwise quarter turn: pixel (x, y) -> (y, S-1-x)
SliceStack rot90ccw(const SliceStack& s) {
    const int S = s.height();
    SliceStack out;
    out.key_slice_id = s.key_slice_id;
    out.pixels = nn::Tensor({3, S, S});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < S; ++y)
            for (int x = 0; x < S; ++x) out.pixels.at(c, y, x) = s.pixels.at(c, x, S - 1 - y);
    for (const Box& b : s.boxes) out.boxes.push_back(Box{b.y1, S - b.x2, b.y2, S - b.x1});
    return out;
}

}  // namespace

SliceStack augment(const SliceStack& stack, Rng& rng) {
    const bool do_h = rng.coin();
    const bool do_v = rng.coin();
    const bool do_rot = rng.coin();
    int quarter_turns = 0;
    if (do_rot) {
        if (stack.height() != stack.width())
            throw std::invalid_argument("augment: rotation requires a square image");
        quarter_turns = 1 + rng.uniform_int(3);
    }
    SliceStack out = stack;
    if (do_h) out = hflip(out);
    if (do_v) out = vflip(out);
    for (int i = 0; i < quarter_turns; ++i) out = rot90ccw(out);
    return out;
}

void PhantomConfig::validate() const {
    if (n_volumes < 0) throw std::invalid_argument("PhantomConfig: n_volumes must be >= 0");
    if (image_size < 32) throw std::invalid_argument("PhantomConfig: image_size too small");
    if (n_slices < 1) throw std::invalid_argument("PhantomConfig: n_slices must be >= 1");
    if (nodules_per_volume[0] < 0 || nodules_per_volume[1] < nodules_per_volume[0])
        throw std::invalid_argument("PhantomConfig: bad nodules_per_volume range");
    if (!(nodule_radius_px[0] > 2.0 && nodule_radius_px[1] < image_size / 4.0 &&
          nodule_radius_px[0] <= nodule_radius_px[1]))
        throw std::invalid_argument(
            "PhantomConfig: nodule radius range must lie within (2, image_size/4)");
    if (distractor_density < 0.0)
        throw std::invalid_argument("PhantomConfig: distractor_density must be >= 0");
}

}  // namespace noddet::data
