#pragma once

#include <string>
#include <vector>

#include "noddet/data/dataset.hpp"
#include "noddet/detector.hpp"
#include "noddet/train/loss.hpp"
#include "noddet/train/optim.hpp"

namespace noddet::train {

struct EpochLog {
    int epoch = 0;
    LossBreakdown mean;
    double lr = 0.0;
};

// One joint RPN + head training step on a single sample; gradients accumulate
// into the detector's parameters (scaled by grad_scale). Returns the loss
// breakdown. Sampling and dropout randomness come from the two streams.
LossBreakdown train_step(Detector& det, const data::SliceStack& stack, Rng& sampler_rng,
                         Rng& dropout_rng, double grad_scale);

// End-to-end joint training: per-epoch shuffling, augmentation, Adam with the
// two-phase learning rate, per-epoch checkpoints (ckpt_epoch_NNN.bin) and a
// train_log.csv under out_dir. start_epoch > 0 resumes a loaded detector;
// adam_t must then carry the restored step count. Deterministic given seed.
std::vector<EpochLog> fit(Detector& det, const std::vector<data::Sample>& samples,
                          const TrainConfig& cfg, const std::string& out_dir, int start_epoch = 0,
                          std::int64_t adam_t = 0);

std::string checkpoint_name(int epoch);

}  // namespace noddet::train
