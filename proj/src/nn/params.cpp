#include "noddet/nn/params.hpp"

#include <stdexcept>

namespace noddet::nn {

Parameter& ParamStore::create(const std::string& name, ParamKind kind, std::vector<int> shape,
                              double fill) {
    if (by_name_.count(name)) throw std::invalid_argument("ParamStore: duplicate parameter " + name);
    auto p = std::make_unique<Parameter>();
    p->name = name;
    p->kind = kind;
    p->value = Tensor::full(std::move(shape), fill);
    Parameter& ref = *p;
    by_name_[name] = p.get();
    order_.push_back(std::move(p));
    return ref;
}

Parameter* ParamStore::find(const std::string& name) {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? nullptr : it->second;
}

const Parameter* ParamStore::find(const std::string& name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? nullptr : it->second;
}

Parameter& ParamStore::require(const std::string& name) {
    Parameter* p = find(name);
    if (!p) throw std::invalid_argument("ParamStore: missing parameter " + name);
    return *p;
}

void ParamStore::zero_grads() {
    for (auto& p : order_) {
        p->ensure_grad();
        p->grad.fill(0.0);
    }
}

std::int64_t ParamStore::scalar_count(bool trainable_only) const {
    std::int64_t n = 0;
    for (const auto& p : order_) {
        if (trainable_only && !trainable(p->kind)) continue;
        n += p->value.numel();
    }
    return n;
}

std::vector<Parameter*> ParamStore::items() {
    std::vector<Parameter*> out;
    out.reserve(order_.size());
    for (auto& p : order_) out.push_back(p.get());
    return out;
}

std::vector<const Parameter*> ParamStore::items() const {
    std::vector<const Parameter*> out;
    out.reserve(order_.size());
    for (const auto& p : order_) out.push_back(p.get());
    return out;
}

}  // namespace noddet::nn
