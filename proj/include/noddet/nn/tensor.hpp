#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace noddet::nn {

// Dense row-major double tensor. Rank is dynamic; everything in this project
// is rank 1..4 (vectors, matrices, CHW feature maps, OIHW kernels).
struct Tensor {
    std::vector<int> shape;
    std::vector<double> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)), v(count(shape), 0.0) {}
    Tensor(std::vector<int> s, double fill) : shape(std::move(s)), v(count(shape), fill) {}

    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
    static Tensor full(std::vector<int> s, double value) { return Tensor(std::move(s), value); }

    static std::int64_t count(const std::vector<int>& s) {
        std::int64_t n = 1;
        for (int d : s) {
            if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
            n *= d;
        }
        return n;
    }

    std::int64_t numel() const { return static_cast<std::int64_t>(v.size()); }
    int ndim() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape.at(static_cast<std::size_t>(i)); }
    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    bool empty() const { return v.empty(); }

    double* data() { return v.data(); }
    const double* data() const { return v.data(); }

    double& at(std::int64_t i) { return v[static_cast<std::size_t>(i)]; }
    double at(std::int64_t i) const { return v[static_cast<std::size_t>(i)]; }

    double& at(int i, int j) { return v[static_cast<std::size_t>(i) * dim(1) + j]; }
    double at(int i, int j) const { return v[static_cast<std::size_t>(i) * dim(1) + j]; }

    double& at(int c, int y, int x) {
        return v[(static_cast<std::size_t>(c) * dim(1) + y) * dim(2) + x];
    }
    double at(int c, int y, int x) const {
        return v[(static_cast<std::size_t>(c) * dim(1) + y) * dim(2) + x];
    }

    double& at(int o, int i, int y, int x) {
        return v[((static_cast<std::size_t>(o) * dim(1) + i) * dim(2) + y) * dim(3) + x];
    }
    double at(int o, int i, int y, int x) const {
        return v[((static_cast<std::size_t>(o) * dim(1) + i) * dim(2) + y) * dim(3) + x];
    }

    void fill(double value) { std::fill(v.begin(), v.end(), value); }
};

}  // namespace noddet::nn
