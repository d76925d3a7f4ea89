#include "noddet/targets/boxes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace noddet::targets {

double iou(const Box& a, const Box& b) {
    a.require_valid("iou");
    b.require_valid("iou");
    const double ix = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const double iy = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    const double inter = ix * iy;
    return inter / (a.area() + b.area() - inter);
}

BoxDelta encode_box(const Box& ref, const Box& gt) {
    ref.require_valid("encode_box ref");
    if (gt.width() <= 0.0 || gt.height() <= 0.0)
        throw std::invalid_argument("encode_box: ground truth must have positive size");
    BoxDelta t;
    t.tx = (gt.cx() - ref.cx()) / ref.width();
    t.ty = (gt.cy() - ref.cy()) / ref.height();
    t.tw = std::log(gt.width() / ref.width());
    t.th = std::log(gt.height() / ref.height());
    return t;
}

Box decode_box(const Box& ref, const BoxDelta& t) {
    ref.require_valid("decode_box ref");
    const double cx = ref.cx() + t.tx * ref.width();
    const double cy = ref.cy() + t.ty * ref.height();
    const double w = ref.width() * std::exp(t.tw);
    const double h = ref.height() * std::exp(t.th);
    return Box::from_center(cx, cy, w, h);
}

std::vector<int> nms(const std::vector<Box>& boxes, const std::vector<double>& scores,
                     double iou_thr) {
    if (boxes.size() != scores.size()) throw std::invalid_argument("nms: length mismatch");
    std::vector<int> order(boxes.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
    });
    std::vector<int> kept;
    std::vector<char> suppressed(boxes.size(), 0);
    for (int i : order) {
        if (suppressed[static_cast<std::size_t>(i)]) continue;
        kept.push_back(i);
        for (int j : order) {
            if (j == i || suppressed[static_cast<std::size_t>(j)]) continue;
            if (iou(boxes[static_cast<std::size_t>(i)], boxes[static_cast<std::size_t>(j)]) >
                iou_thr)
                suppressed[static_cast<std::size_t>(j)] = 1;
        }
    }
    return kept;
}

}  // namespace noddet::targets
