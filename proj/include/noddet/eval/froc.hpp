#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "noddet/box.hpp"

namespace noddet::eval {

struct Detection {
    Box box;
    double confidence = 0.0;
    std::string scan_id;
};

inline constexpr std::array<double, 6> kStandardFpRates{0.5, 1.0, 2.0, 4.0, 8.0, 16.0};

struct MatchResult {
    std::vector<bool> is_tp;   // aligned with the input detections
    std::vector<bool> gt_hit;  // aligned with the input ground truths
};

// Greedy matching by descending confidence (ties to the lower input index):
// a detection claims the highest-IoU still-unmatched ground truth when that
// IoU exceeds iou_thr, otherwise it is a false positive.
MatchResult match_detections(const std::vector<Detection>& dets, const std::vector<Box>& gts,
                             double iou_thr = 0.5);

struct FrocPoint {
    double threshold = 0.0;  // confidence cutoff; detections with conf >= threshold count
    double avg_fp = 0.0;
    double sensitivity = 0.0;
};

struct FrocCurve {
    std::vector<FrocPoint> points;        // descending threshold, starting at +inf
    std::map<double, double> sens_at;     // the six standard FP rates
    double average_froc = 0.0;
    int n_scans = 0;
    int n_gts = 0;
};

struct ScanCase {
    std::vector<Detection> dets;
    std::vector<Box> gts;
};

// Threshold sweep over all distinct confidences; sens_at uses step
// interpolation (best sensitivity whose avg FP rate does not exceed the
// target). Zero total ground truths is an error (undefined sensitivity).
FrocCurve froc(const std::vector<ScanCase>& per_scan, double iou_thr = 0.5);

// Arithmetic mean of the six sensitivities.
double average_froc(const std::vector<double>& sens_at_rates);

}  // namespace noddet::eval
