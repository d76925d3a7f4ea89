#pragma once

#include <array>
#include <cstdint>

#include "json.hpp"

#include "noddet/nn/params.hpp"
#include "noddet/rng.hpp"

namespace noddet::train {

struct TrainConfig {
    double learning_rate = 1e-3;
    std::array<double, 2> betas{0.9, 0.999};
    double eps = 1e-8;
    double weight_decay = 1e-4;
    double lr_after_epoch5 = 1e-4;
    int epochs = 15;
    int batch_size = 2;
    std::uint64_t seed = 1;
    bool augment = true;

    void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

// Epochs are 1-based: 1e-3 through epoch 5, 1e-4 afterwards.
double lr_schedule(int epoch, const TrainConfig& cfg);

// Xavier-uniform kernels (a = sqrt(6/(fan_in+fan_out))), zero biases, unit BN
// scale / zero shift. Deterministic in the rng.
void init_parameters(nn::ParamStore& store, Rng& rng);

// Adam with decoupled weight decay, applied to kernel entries only.
class Adam {
public:
    explicit Adam(const TrainConfig& cfg) : cfg_(cfg) {}

    void step(nn::ParamStore& store, double lr);

    std::int64_t t() const { return t_; }
    void set_t(std::int64_t t) { t_ = t; }

private:
    TrainConfig cfg_;
    std::int64_t t_ = 0;
};

}  // namespace noddet::train
