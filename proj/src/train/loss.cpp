#include "noddet/train/loss.hpp"

#include <cmath>
#include <stdexcept>

#include "noddet/errors.hpp"

namespace noddet::train {

using nn::Graph;
using nn::Tensor;
using nn::Var;

double smooth_l1(double x) {
    const double a = std::abs(x);
    return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

namespace {

Var delta_regression_term(Graph& g, Var pred_rows, const std::vector<targets::BoxDelta>& tgts,
                          const std::vector<int>& rows, int n_reg) {
    Tensor t({static_cast<int>(rows.size()), 4});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const targets::BoxDelta& d = tgts[static_cast<std::size_t>(rows[i])];
        t.at(static_cast<int>(i), 0) = d.tx;
        t.at(static_cast<int>(i), 1) = d.ty;
        t.at(static_cast<int>(i), 2) = d.tw;
        t.at(static_cast<int>(i), 3) = d.th;
    }
    Var diff = g.sub(g.gather_rows(pred_rows, rows), g.leaf(std::move(t)));
    return g.scale(g.sum(g.smooth_l1(diff)), 1.0 / n_reg);
}

}  // namespace

StageLoss rpn_loss(Graph& g, const heads::RpnOut& pred, const targets::RpnLabels& labels,
                   const std::vector<int>& sampled) {
    if (sampled.empty()) throw EmptyMinibatch("rpn_loss: empty minibatch");
    const std::int64_t A = pred.objectness.val().numel();
    if (static_cast<std::int64_t>(labels.cls.size()) != A)
        throw std::invalid_argument("rpn_loss: label/prediction length mismatch");

    StageLoss out;
    out.n_cls = static_cast<int>(sampled.size());
    Tensor targets_t({out.n_cls});
    std::vector<int> positives;
    for (std::size_t i = 0; i < sampled.size(); ++i) {
        const std::int8_t c = labels.cls[static_cast<std::size_t>(sampled[i])];
        if (c == targets::kNeutral)
            throw std::invalid_argument("rpn_loss: neutral anchor in minibatch");
        targets_t.at(static_cast<std::int64_t>(i)) = c == targets::kPositive ? 1.0 : 0.0;
        if (c == targets::kPositive) positives.push_back(sampled[i]);
    }
    Var sampled_logits = g.gather_rows(pred.objectness, sampled);
    out.cls = g.scale(g.sum(g.bce_with_logits(sampled_logits, std::move(targets_t))),
                      1.0 / out.n_cls);
    out.n_reg = static_cast<int>(positives.size());
    if (out.n_reg > 0) out.reg = delta_regression_term(g, pred.deltas, labels.reg, positives, out.n_reg);
    return out;
}

StageLoss head_loss(Graph& g, const heads::ClassifierOut& pred,
                    const targets::ProposalLabels& labels, const std::vector<int>& sampled) {
    if (sampled.empty()) throw EmptyMinibatch("head_loss: empty minibatch");
    StageLoss out;
    out.n_cls = static_cast<int>(sampled.size());
    std::vector<int> classes(sampled.size());
    std::vector<int> fg_rows_in_sample;
    std::vector<int> fg_rows_in_labels;
    for (std::size_t i = 0; i < sampled.size(); ++i) {
        const targets::ProposalClass c = labels.cls[static_cast<std::size_t>(sampled[i])];
        if (c == targets::ProposalClass::discard)
            throw std::invalid_argument("head_loss: discarded proposal in minibatch");
        classes[i] = c == targets::ProposalClass::foreground ? heads::kNoduleClass
                                                             : heads::kBackgroundClass;
        if (c == targets::ProposalClass::foreground) {
            fg_rows_in_sample.push_back(static_cast<int>(i));
            fg_rows_in_labels.push_back(sampled[i]);
        }
    }
    // pred rows already follow the sampled order (the classifier ran on the sample)
    if (pred.class_logits.val().dim(0) != out.n_cls)
        throw std::invalid_argument("head_loss: prediction/sample row count mismatch");
    out.cls = g.scale(g.sum(g.softmax_ce(pred.class_logits, std::move(classes))), 1.0 / out.n_cls);
    out.n_reg = static_cast<int>(fg_rows_in_sample.size());
    if (out.n_reg > 0) {
        Tensor t({out.n_reg, 4});
        for (int i = 0; i < out.n_reg; ++i) {
            const targets::BoxDelta& d =
                labels.reg[static_cast<std::size_t>(fg_rows_in_labels[static_cast<std::size_t>(i)])];
            t.at(i, 0) = d.tx;
            t.at(i, 1) = d.ty;
            t.at(i, 2) = d.tw;
            t.at(i, 3) = d.th;
        }
        Var diff = g.sub(g.gather_rows(pred.deltas, fg_rows_in_sample), g.leaf(std::move(t)));
        out.reg = g.scale(g.sum(g.smooth_l1(diff)), 1.0 / out.n_reg);
    }
    return out;
}

Var combine_losses(Graph& g, const StageLoss& rpn, const StageLoss& head, double lambda,
                   LossBreakdown& out) {
    if (rpn.n_cls == 0 && head.n_cls == 0)
        throw EmptyMinibatch("combine_losses: both stages empty");
    std::vector<Var> terms;
    out = LossBreakdown{};
    if (rpn.n_cls > 0) {
        out.rpn_cls = rpn.cls.val().at(0);
        terms.push_back(rpn.cls);
        if (rpn.reg.valid()) {
            out.rpn_reg = rpn.reg.val().at(0);
            terms.push_back(g.scale(rpn.reg, lambda));
        }
    }
    if (head.n_cls > 0) {
        out.head_cls = head.cls.val().at(0);
        terms.push_back(head.cls);
        if (head.reg.valid()) {
            out.head_reg = head.reg.val().at(0);
            terms.push_back(g.scale(head.reg, lambda));
        }
    }
    out.n_cls = rpn.n_cls + head.n_cls;
    out.n_reg = rpn.n_reg + head.n_reg;
    Var total = g.add_scalars(terms);
    out.total = total.val().at(0);
    return total;
}

}  // namespace noddet::train
