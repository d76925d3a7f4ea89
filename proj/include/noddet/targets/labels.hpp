#pragma once

#include <cstdint>
#include <vector>

#include "noddet/rng.hpp"
#include "noddet/targets/anchors.hpp"
#include "noddet/targets/boxes.hpp"

namespace noddet::targets {

inline constexpr std::int8_t kPositive = 1;
inline constexpr std::int8_t kNegative = 0;
inline constexpr std::int8_t kNeutral = -1;

// Per-anchor RPN training labels, same length and order as the AnchorSet.
// reg is meaningful only where cls == kPositive.
struct RpnLabels {
    std::vector<std::int8_t> cls;
    std::vector<BoxDelta> reg;
};

enum class ProposalClass : std::int8_t { background = 0, foreground = 1, discard = -1 };

struct ProposalLabels {
    std::vector<ProposalClass> cls;
    std::vector<BoxDelta> reg;  // meaningful only on foreground entries
};

// IoU > 0.7 positive, < 0.3 negative, otherwise neutral; additionally every
// ground truth's argmax-IoU anchor is positive so no target is unlearnable.
// Regression targets point at the anchor's argmax ground truth.
RpnLabels assign_rpn_labels(const AnchorSet& anchors, const std::vector<Box>& gts,
                            double pos_thr = 0.7, double neg_thr = 0.3);

// IoU > 0.5 foreground, in [0.3, 0.5] background, below 0.3 discarded.
ProposalLabels assign_classifier_labels(const std::vector<Box>& proposals,
                                        const std::vector<Box>& gts, double fg_thr = 0.5,
                                        double bg_thr = 0.3);

// Up to n*pos_fraction positives and the remainder negatives, sampled
// uniformly without replacement; positive deficits are filled from negatives.
std::vector<int> sample_rpn_minibatch(const std::vector<std::int8_t>& cls, int n,
                                      double pos_fraction, Rng& rng);

// Same policy over proposal labels (foreground/background).
std::vector<int> sample_proposal_minibatch(const std::vector<ProposalClass>& cls, int n,
                                           double fg_fraction, Rng& rng);

}  // namespace noddet::targets
