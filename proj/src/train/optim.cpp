#include "noddet/train/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace noddet::train {

void TrainConfig::validate() const {
    if (learning_rate <= 0.0 || lr_after_epoch5 <= 0.0 || eps <= 0.0)
        throw std::invalid_argument("TrainConfig: rates must be positive");
    if (betas[0] <= 0.0 || betas[0] >= 1.0 || betas[1] <= 0.0 || betas[1] >= 1.0)
        throw std::invalid_argument("TrainConfig: betas must lie in (0, 1)");
    if (weight_decay < 0.0) throw std::invalid_argument("TrainConfig: weight_decay must be >= 0");
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = nlohmann::json{{"learning_rate", c.learning_rate},
                       {"betas", c.betas},
                       {"eps", c.eps},
                       {"weight_decay", c.weight_decay},
                       {"lr_after_epoch5", c.lr_after_epoch5},
                       {"epochs", c.epochs},
                       {"batch_size", c.batch_size},
                       {"seed", c.seed},
                       {"augment", c.augment}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    j.at("learning_rate").get_to(c.learning_rate);
    j.at("betas").get_to(c.betas);
    j.at("eps").get_to(c.eps);
    j.at("weight_decay").get_to(c.weight_decay);
    j.at("lr_after_epoch5").get_to(c.lr_after_epoch5);
    j.at("epochs").get_to(c.epochs);
    j.at("batch_size").get_to(c.batch_size);
    j.at("seed").get_to(c.seed);
    j.at("augment").get_to(c.augment);
}

double lr_schedule(int epoch, const TrainConfig& cfg) {
    if (epoch < 1) throw std::invalid_argument("lr_schedule: epochs are 1-based");
    return epoch <= 5 ? cfg.learning_rate : cfg.lr_after_epoch5;
}

namespace {

// fan per connection for Xavier bounds; grouped convolutions count only the
// channels inside one group
void xavier_fans(const nn::Parameter& p, double& fan_in, double& fan_out) {
    const auto& s = p.value.shape;
    if (s.size() == 2) {  // linear: {out, in}
        fan_in = s[1];
        fan_out = s[0];
    } else if (s.size() == 4) {  // conv {o, i/g, kh, kw} or deconv {i, o/g, kh, kw}
        const double receptive = static_cast<double>(s[2]) * s[3];
        fan_in = s[1] * receptive;
        fan_out = s[0] * receptive;
    } else {
        fan_in = fan_out = static_cast<double>(p.value.numel());
    }
}

}  // namespace

void init_parameters(nn::ParamStore& store, Rng& rng) {
    for (nn::Parameter* p : store.items()) {
        switch (p->kind) {
            case nn::ParamKind::kernel: {
                double fan_in = 0.0, fan_out = 0.0;
                xavier_fans(*p, fan_in, fan_out);
                const double a = std::sqrt(6.0 / (fan_in + fan_out));
                for (double& v : p->value.v) v = rng.uniform(-a, a);
                break;
            }
            case nn::ParamKind::bias:
            case nn::ParamKind::bn_shift:
                p->value.fill(0.0);
                break;
            case nn::ParamKind::bn_scale:
                p->value.fill(1.0);
                break;
            case nn::ParamKind::bn_state:
                // running mean 0 / var 1 as constructed
                break;
        }
    }
}

void Adam::step(nn::ParamStore& store, double lr) {
    ++t_;
    const double b1 = cfg_.betas[0], b2 = cfg_.betas[1];
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (nn::Parameter* p : store.items()) {
        if (!trainable(p->kind)) continue;
        p->ensure_grad();
        if (!p->adam_m.same_shape(p->value)) {
            p->adam_m = nn::Tensor::zeros(p->value.shape);
            p->adam_v = nn::Tensor::zeros(p->value.shape);
        }
        const bool decay = p->kind == nn::ParamKind::kernel && cfg_.weight_decay > 0.0;
        for (std::int64_t i = 0; i < p->value.numel(); ++i) {
            const double gi = p->grad.at(i);
            double& m = p->adam_m.at(i);
            double& v = p->adam_v.at(i);
            m = b1 * m + (1.0 - b1) * gi;
            v = b2 * v + (1.0 - b2) * gi * gi;
            double update = lr * (m / bc1) / (std::sqrt(v / bc2) + cfg_.eps);
            if (decay) update += lr * cfg_.weight_decay * p->value.at(i);
            p->value.at(i) -= update;
        }
    }
}

}  // namespace noddet::train
