#include "noddet/eval/froc.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "noddet/targets/boxes.hpp"

namespace noddet::eval {

MatchResult match_detections(const std::vector<Detection>& dets, const std::vector<Box>& gts,
                             double iou_thr) {
    MatchResult out;
    out.is_tp.assign(dets.size(), false);
    out.gt_hit.assign(gts.size(), false);

    std::vector<int> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return dets[static_cast<std::size_t>(a)].confidence >
               dets[static_cast<std::size_t>(b)].confidence;
    });

    for (int di : order) {
        const Detection& d = dets[static_cast<std::size_t>(di)];
        double best = iou_thr;  // must strictly exceed the threshold
        int best_gt = -1;
        for (std::size_t gi = 0; gi < gts.size(); ++gi) {
            if (out.gt_hit[gi]) continue;
            const double v = targets::iou(d.box, gts[gi]);
            if (v > best) {
                best = v;
                best_gt = static_cast<int>(gi);
            }
        }
        if (best_gt >= 0) {
            out.is_tp[static_cast<std::size_t>(di)] = true;
            out.gt_hit[static_cast<std::size_t>(best_gt)] = true;
        }
    }
    return out;
}

FrocCurve froc(const std::vector<ScanCase>& per_scan, double iou_thr) {
    if (per_scan.empty()) throw std::invalid_argument("froc: needs at least one scan");
    FrocCurve out;
    out.n_scans = static_cast<int>(per_scan.size());
    for (const ScanCase& scan : per_scan) out.n_gts += static_cast<int>(scan.gts.size());
    if (out.n_gts == 0)
        throw std::invalid_argument("froc: undefined sensitivity, no ground truths");

    // Greedy matching is prefix-stable in confidence order, so matching once
    // against the full detection set gives the flags of every threshold.
    struct Flagged {
        double conf;
        bool tp;
    };
    std::vector<Flagged> flagged;
    for (const ScanCase& scan : per_scan) {
        const MatchResult m = match_detections(scan.dets, scan.gts, iou_thr);
        for (std::size_t i = 0; i < scan.dets.size(); ++i)
            flagged.push_back(Flagged{scan.dets[i].confidence, static_cast<bool>(m.is_tp[i])});
    }
    std::sort(flagged.begin(), flagged.end(),
              [](const Flagged& a, const Flagged& b) { return a.conf > b.conf; });

    out.points.push_back(FrocPoint{std::numeric_limits<double>::infinity(), 0.0, 0.0});
    const double inv_scans = 1.0 / out.n_scans;
    const double inv_gts = 1.0 / out.n_gts;
    int tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < flagged.size()) {
        const double thr = flagged[i].conf;
        while (i < flagged.size() && flagged[i].conf == thr) {
            flagged[i].tp ? ++tp : ++fp;
            ++i;
        }
        out.points.push_back(FrocPoint{thr, fp * inv_scans, tp * inv_gts});
    }

    for (double rate : kStandardFpRates) {
        double best = 0.0;
        for (const FrocPoint& p : out.points)
            if (p.avg_fp <= rate) best = std::max(best, p.sensitivity);
        out.sens_at[rate] = best;
    }
    std::vector<double> six;
    for (double rate : kStandardFpRates) six.push_back(out.sens_at[rate]);
    out.average_froc = average_froc(six);
    return out;
}

double average_froc(const std::vector<double>& sens_at_rates) {
    if (sens_at_rates.size() != kStandardFpRates.size())
        throw std::invalid_argument("average_froc: expects exactly six sensitivities");
    double sum = 0.0;
    for (double s : sens_at_rates) {
        if (s < 0.0 || s > 1.0)
            throw std::invalid_argument("average_froc: sensitivities must lie in [0, 1]");
        sum += s;
    }
    return sum / static_cast<double>(sens_at_rates.size());
}

}  // namespace noddet::eval
