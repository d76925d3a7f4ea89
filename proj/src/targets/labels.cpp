#include "noddet/targets/labels.hpp"

#include <algorithm>
#include <stdexcept>

#include "noddet/errors.hpp"

namespace noddet::targets {

RpnLabels assign_rpn_labels(const AnchorSet& anchors, const std::vector<Box>& gts, double pos_thr,
                            double neg_thr) {
    const std::size_t n = anchors.boxes.size();
    RpnLabels out;
    out.cls.assign(n, kNegative);
    out.reg.assign(n, BoxDelta{});
    if (gts.empty()) return out;

    std::vector<int> best_gt(n, -1);
    std::vector<double> best_iou(n, 0.0);
    std::vector<int> gt_argmax(gts.size(), -1);
    std::vector<double> gt_best(gts.size(), -1.0);

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < gts.size(); ++j) {
            const double v = iou(anchors.boxes[i], gts[j]);
            if (v > best_iou[i] || best_gt[i] < 0) {
                best_iou[i] = v;
                best_gt[i] = static_cast<int>(j);
            }
            if (v > gt_best[j]) {
                gt_best[j] = v;
                gt_argmax[j] = static_cast<int>(i);
            }
        }
        if (best_iou[i] > pos_thr)
            out.cls[i] = kPositive;
        else if (best_iou[i] < neg_thr)
            out.cls[i] = kNegative;
        else
            out.cls[i] = kNeutral;
    }
    // guarantee rule: the closest anchor of each gt trains positive
    for (std::size_t j = 0; j < gts.size(); ++j) {
        const int a = gt_argmax[j];
        if (a < 0) continue;
        out.cls[static_cast<std::size_t>(a)] = kPositive;
        best_gt[static_cast<std::size_t>(a)] = static_cast<int>(j);
    }
    for (std::size_t i = 0; i < n; ++i)
        if (out.cls[i] == kPositive)
            out.reg[i] = encode_box(anchors.boxes[i], gts[static_cast<std::size_t>(best_gt[i])]);
    return out;
}

ProposalLabels assign_classifier_labels(const std::vector<Box>& proposals,
                                        const std::vector<Box>& gts, double fg_thr,
                                        double bg_thr) {
    ProposalLabels out;
    out.cls.assign(proposals.size(), ProposalClass::discard);
    out.reg.assign(proposals.size(), BoxDelta{});
    for (std::size_t i = 0; i < proposals.size(); ++i) {
        double m = 0.0;
        int arg = -1;
        for (std::size_t j = 0; j < gts.size(); ++j) {
            const double v = iou(proposals[i], gts[j]);
            if (v > m) {
                m = v;
                arg = static_cast<int>(j);
            }
        }
        if (m > fg_thr) {
            out.cls[i] = ProposalClass::foreground;
            out.reg[i] = encode_box(proposals[i], gts[static_cast<std::size_t>(arg)]);
        } else if (m >= bg_thr) {
            out.cls[i] = ProposalClass::background;
        }  // below bg_thr: excluded from the classifier loss entirely
    }
    return out;
}

namespace {

std::vector<int> take_uniform(std::vector<int> pool, std::size_t want, Rng& rng) {
    if (pool.size() <= want) return pool;
    rng.shuffle(pool);
    pool.resize(want);
    std::sort(pool.begin(), pool.end());
    return pool;
}

std::vector<int> sample_two_class(const std::vector<int>& pos, const std::vector<int>& neg, int n,
                                  double pos_fraction, Rng& rng) {
    if (n <= 0) throw std::invalid_argument("minibatch size must be positive");
    if (pos.empty() && neg.empty()) throw EmptyMinibatch("no labeled candidates to sample");
    const auto want_pos = static_cast<std::size_t>(static_cast<double>(n) * pos_fraction);
    std::vector<int> chosen = take_uniform(pos, want_pos, rng);
    const std::size_t want_neg = static_cast<std::size_t>(n) - chosen.size();
    std::vector<int> negs = take_uniform(neg, want_neg, rng);
    chosen.insert(chosen.end(), negs.begin(), negs.end());
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

}  // namespace

std::vector<int> sample_rpn_minibatch(const std::vector<std::int8_t>& cls, int n,
                                      double pos_fraction, Rng& rng) {
    std::vector<int> pos, neg;
    for (std::size_t i = 0; i < cls.size(); ++i) {
        if (cls[i] == kPositive) pos.push_back(static_cast<int>(i));
        else if (cls[i] == kNegative) neg.push_back(static_cast<int>(i));
    }
    return sample_two_class(pos, neg, n, pos_fraction, rng);
}

std::vector<int> sample_proposal_minibatch(const std::vector<ProposalClass>& cls, int n,
                                           double fg_fraction, Rng& rng) {
    std::vector<int> pos, neg;
    for (std::size_t i = 0; i < cls.size(); ++i) {
        if (cls[i] == ProposalClass::foreground) pos.push_back(static_cast<int>(i));
        else if (cls[i] == ProposalClass::background) neg.push_back(static_cast<int>(i));
    }
    return sample_two_class(pos, neg, n, fg_fraction, rng);
}

}  // namespace noddet::targets
