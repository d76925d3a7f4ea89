#pragma once

#include <vector>

#include "noddet/heads/classifier.hpp"
#include "noddet/heads/rpn.hpp"
#include "noddet/nn/autograd.hpp"
#include "noddet/targets/labels.hpp"

namespace noddet::train {

// Scalar smooth L1: 0.5 x^2 for |x| < 1, |x| - 0.5 otherwise.
double smooth_l1(double x);

// Per-stage multi-task loss pieces. cls and reg are the normalized sums
// (1/N_cls) sum L_cls and (1/N_reg) sum p* L_reg; reg is invalid when the
// stage has no regression-active positions (its contribution is exactly 0).
struct StageLoss {
    nn::Var cls;
    nn::Var reg;
    int n_cls = 0;
    int n_reg = 0;
};

struct LossBreakdown {
    double rpn_cls = 0.0;
    double rpn_reg = 0.0;
    double head_cls = 0.0;
    double head_reg = 0.0;
    double total = 0.0;
    int n_cls = 0;  // sampled positions across both stages
    int n_reg = 0;  // regression-active positions across both stages
};

// Binary log-loss over sampled anchors plus smooth L1 on the positive ones.
StageLoss rpn_loss(nn::Graph& g, const heads::RpnOut& pred, const targets::RpnLabels& labels,
                   const std::vector<int>& sampled);

// Two-class log-loss over sampled proposals plus smooth L1 on foregrounds.
StageLoss head_loss(nn::Graph& g, const heads::ClassifierOut& pred,
                    const targets::ProposalLabels& labels, const std::vector<int>& sampled);

// total = rpn.cls + lambda * rpn.reg + head.cls + lambda * head.reg.
// Either stage may be absent (n_cls == 0); at least one must be present.
nn::Var combine_losses(nn::Graph& g, const StageLoss& rpn, const StageLoss& head, double lambda,
                       LossBreakdown& out);

}  // namespace noddet::train
