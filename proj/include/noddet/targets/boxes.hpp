#pragma once

#include <array>
#include <vector>

#include "noddet/box.hpp"

namespace noddet::targets {

// Intersection over union; 0 for disjoint boxes.
double iou(const Box& a, const Box& b);

// R-CNN box parametrization on center/size form:
// tx=(Gx-Px)/Pw, ty=(Gy-Py)/Ph, tw=log(Gw/Pw), th=log(Gh/Ph).
struct BoxDelta {
    double tx = 0.0, ty = 0.0, tw = 0.0, th = 0.0;
};

BoxDelta encode_box(const Box& ref, const Box& gt);
Box decode_box(const Box& ref, const BoxDelta& t);

// Greedy descending-score suppression; ties broken toward the lower original
// index. Returns kept indices in score order.
std::vector<int> nms(const std::vector<Box>& boxes, const std::vector<double>& scores,
                     double iou_thr);

}  // namespace noddet::targets
