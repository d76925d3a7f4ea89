#include "noddet/train/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "noddet/errors.hpp"

namespace fs = std::filesystem;

namespace noddet::train {

namespace {

constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kAugmentStream = 2;
constexpr std::uint64_t kSampleStream = 3;
constexpr std::uint64_t kDropoutStream = 4;

void check_finite(const LossBreakdown& b, int epoch, const std::string& scan) {
    const struct {
        const char* name;
        double v;
    } parts[] = {{"rpn_cls", b.rpn_cls}, {"rpn_reg", b.rpn_reg}, {"head_cls", b.head_cls},
                 {"head_reg", b.head_reg}, {"total", b.total}};
    for (const auto& p : parts)
        if (!std::isfinite(p.v))
            throw std::runtime_error("fit: non-finite loss component '" + std::string(p.name) +
                                     "' at epoch " + std::to_string(epoch) + ", sample " + scan);
}

}  // namespace

LossBreakdown train_step(Detector& det, const data::SliceStack& stack, Rng& sampler_rng,
                         Rng& dropout_rng, double grad_scale) {
    const ProposalConfig& pc = det.config().proposals;
    nn::Graph g;
    nn::Var image = g.leaf(stack.pixels);
    const backbone::PyramidVar pyr = det.pyramid(g, image, true);
    const heads::RpnOut rpn_out = det.rpn(g, pyr);

    const targets::RpnLabels rpn_labels = targets::assign_rpn_labels(det.anchors(), stack.boxes);
    const std::vector<int> rpn_sample =
        targets::sample_rpn_minibatch(rpn_labels.cls, pc.rpn_batch, pc.rpn_pos_fraction,
                                      sampler_rng);
    const StageLoss rpn_stage = rpn_loss(g, rpn_out, rpn_labels, rpn_sample);

    // second stage trains on detached proposals
    StageLoss head_stage;
    std::vector<Box> proposal_boxes;
    for (const ScoredBox& p :
         det.propose(rpn_out.objectness.val(), rpn_out.deltas.val(), true))
        proposal_boxes.push_back(p.box);
    if (pc.add_gt_proposals)
        for (const Box& b : stack.boxes)
            proposal_boxes.push_back(clip_box(b, det.config().input_size, det.config().input_size));
    if (!proposal_boxes.empty() && !stack.boxes.empty()) {
        const targets::ProposalLabels head_labels =
            targets::assign_classifier_labels(proposal_boxes, stack.boxes);
        bool any_candidate = false;
        for (const targets::ProposalClass c : head_labels.cls)
            if (c != targets::ProposalClass::discard) any_candidate = true;
        if (any_candidate) {
            const std::vector<int> head_sample = targets::sample_proposal_minibatch(
                head_labels.cls, pc.head_batch, pc.head_fg_fraction, sampler_rng);
            std::vector<Box> rois;
            rois.reserve(head_sample.size());
            for (int i : head_sample) rois.push_back(proposal_boxes[static_cast<std::size_t>(i)]);
            const heads::ClassifierOut cls_out = det.classify(g, pyr, rois, true, dropout_rng);
            head_stage = head_loss(g, cls_out, head_labels, head_sample);
        }
    }

    LossBreakdown breakdown;
    nn::Var total = combine_losses(g, rpn_stage, head_stage, 1.0, breakdown);
    g.backward(g.scale(total, grad_scale));
    return breakdown;
}

std::string checkpoint_name(int epoch) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "ckpt_epoch_%03d.bin", epoch);
    return buf;
}

std::vector<EpochLog> fit(Detector& det, const std::vector<data::Sample>& samples,
                          const TrainConfig& cfg, const std::string& out_dir, int start_epoch,
                          std::int64_t adam_t) {
    cfg.validate();
    if (samples.empty()) throw std::invalid_argument("fit: empty dataset");
    fs::create_directories(out_dir);

    Rng root(cfg.seed);
    Adam adam(cfg);
    adam.set_t(adam_t);

    const fs::path log_path = fs::path(out_dir) / "train_log.csv";
    std::ofstream log(log_path, start_epoch > 0 && fs::exists(log_path)
                                    ? std::ios::app
                                    : std::ios::trunc);
    if (!log) throw IoError("fit: cannot write " + log_path.string());
    if (start_epoch == 0) log << "epoch,rpn_cls,rpn_reg,head_cls,head_reg,total,lr\n";

    std::vector<EpochLog> history;
    for (int epoch = start_epoch + 1; epoch <= cfg.epochs; ++epoch) {
        const auto eu = static_cast<std::uint64_t>(epoch);
        const double lr = lr_schedule(epoch, cfg);

        std::vector<int> order(samples.size());
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng = root.child(Rng::mix(kShuffleStream, eu));
        shuffle_rng.shuffle(order);

        LossBreakdown sums;
        int steps = 0;
        for (std::size_t pos = 0; pos < order.size(); pos += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), pos + static_cast<std::size_t>(cfg.batch_size));
            const double grad_scale = 1.0 / static_cast<double>(end - pos);
            det.params().zero_grads();
            for (std::size_t bi = pos; bi < end; ++bi) {
                const int si = order[bi];
                const data::Sample& sample = samples[static_cast<std::size_t>(si)];
                const auto su = static_cast<std::uint64_t>(si);
                data::SliceStack stack = sample.stack;
                if (cfg.augment) {
                    Rng aug_rng = root.child(Rng::mix(kAugmentStream, Rng::mix(eu, su)));
                    stack = data::augment(stack, aug_rng);
                }
                Rng sampler_rng = root.child(Rng::mix(kSampleStream, Rng::mix(eu, su)));
                Rng dropout_rng = root.child(Rng::mix(kDropoutStream, Rng::mix(eu, su)));
                const LossBreakdown b = train_step(det, stack, sampler_rng, dropout_rng, grad_scale);
                check_finite(b, epoch, sample.scan_id);
                sums.rpn_cls += b.rpn_cls;
                sums.rpn_reg += b.rpn_reg;
                sums.head_cls += b.head_cls;
                sums.head_reg += b.head_reg;
                sums.total += b.total;
                ++steps;
            }
            adam.step(det.params(), lr);
        }

        EpochLog entry;
        entry.epoch = epoch;
        entry.lr = lr;
        entry.mean.rpn_cls = sums.rpn_cls / steps;
        entry.mean.rpn_reg = sums.rpn_reg / steps;
        entry.mean.head_cls = sums.head_cls / steps;
        entry.mean.head_reg = sums.head_reg / steps;
        entry.mean.total = sums.total / steps;
        history.push_back(entry);

        char row[256];
        std::snprintf(row, sizeof(row), "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g", epoch,
                      entry.mean.rpn_cls, entry.mean.rpn_reg, entry.mean.head_cls,
                      entry.mean.head_reg, entry.mean.total, lr);
        log << row << '\n';
        log.flush();

        nlohmann::json manifest = {{"epoch", epoch}, {"adam_t", adam.t()}, {"train", cfg}};
        det.save((fs::path(out_dir) / checkpoint_name(epoch)).string(), manifest, true);
    }
    return history;
}

}  // namespace noddet::train
