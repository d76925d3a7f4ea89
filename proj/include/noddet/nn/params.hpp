#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "noddet/nn/tensor.hpp"

namespace noddet::nn {

// Kernel parameters receive weight decay; bn_state entries (running statistics)
// are saved/restored but never touched by the optimizer.
enum class ParamKind { kernel, bias, bn_scale, bn_shift, bn_state };

inline bool trainable(ParamKind k) { return k != ParamKind::bn_state; }

struct Parameter {
    std::string name;
    ParamKind kind = ParamKind::kernel;
    Tensor value;
    Tensor grad;
    Tensor adam_m;
    Tensor adam_v;

    void ensure_grad() {
        if (!grad.same_shape(value)) grad = Tensor::zeros(value.shape);
    }
};

// Flat registry of named parameters. Layer constructors create entries once;
// checkpoints restore them by name.
class ParamStore {
public:
    Parameter& create(const std::string& name, ParamKind kind, std::vector<int> shape,
                      double fill = 0.0);
    Parameter* find(const std::string& name);
    const Parameter* find(const std::string& name) const;
    Parameter& require(const std::string& name);

    void zero_grads();

    // Total scalar count, optionally restricted to trainable entries.
    std::int64_t scalar_count(bool trainable_only = true) const;

    std::vector<Parameter*> items();
    std::vector<const Parameter*> items() const;
    std::size_t size() const { return order_.size(); }

private:
    std::vector<std::unique_ptr<Parameter>> order_;
    std::map<std::string, Parameter*> by_name_;
};

}  // namespace noddet::nn
