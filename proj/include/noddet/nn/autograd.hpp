#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "noddet/box.hpp"
#include "noddet/nn/params.hpp"
#include "noddet/nn/tensor.hpp"
#include "noddet/rng.hpp"

namespace noddet::nn {

class Graph;

// Handle into a Graph's tape. Cheap to copy; invalid() handles stand for
// absent optional inputs (e.g. an empty dense stream).
struct Var {
    Graph* g = nullptr;
    int id = -1;

    bool valid() const { return g != nullptr && id >= 0; }
    const Tensor& val() const;
};

struct BatchNormState {
    Parameter* running_mean = nullptr;
    Parameter* running_var = nullptr;
};

// Reverse-mode tape. One Graph instance per forward pass; backward() walks the
// tape in reverse and accumulates into Parameter::grad for bound leaves.
class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Var leaf(Tensor t);                // constant, no gradient
    Var input(Tensor t);               // gradient tracked (used by tests)
    Var param(Parameter& p);           // gradient accumulated into p.grad

    const Tensor& value(Var v) const;
    Tensor& grad(Var v);               // lazily zero-initialized

    // elementwise / shape
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double c);
    Var relu(Var a);
    Var reshape(Var a, std::vector<int> shape);
    Var sum(Var a);                                        // -> shape {1}
    Var add_scalars(const std::vector<Var>& xs);           // sum of {1} vars

    // structural
    Var concat_ch(const std::vector<Var>& xs);             // CHW along C
    Var slice_ch(Var a, int c0, int c1);                   // CHW channels [c0, c1)
    Var concat_rows(const std::vector<Var>& xs);           // rank-1/2 along dim 0
    Var gather_rows(Var a, std::vector<int> idx);          // rank-1/2 rows
    // out.flat[i] = a.flat[src_index[i]]; src_index must be a permutation-free
    // gather (duplicates allowed, gradients scatter-add)
    Var permute_flat(Var a, std::vector<std::int64_t> src_index, std::vector<int> out_shape);

    // conv / pooling / resampling (inputs CHW, kernels OIHW; I = C_in/groups)
    Var conv2d(Var x, Var w, Var b, int stride, int pad, int groups);
    // kernels IOHW with O = C_out/groups; fixed 2x geometry: stride 2, pad 1, output pad 1
    Var conv2d_transpose2x(Var x, Var w, Var b, int groups);
    Var maxpool3x3s2(Var x);
    Var upsample2_nearest(Var x);
    Var batchnorm(Var x, Var gamma, Var beta, const BatchNormState& state, bool training,
                  double eps = 1e-5, double momentum = 0.1);

    // box given in feature-map coordinates; 2x2 bilinear samples per bin
    Var roi_align(Var feat, const Box& box, int pool);

    // dense layers (x: R x In, w: Out x In, b: Out)
    Var linear(Var x, Var w, Var b);
    Var dropout(Var x, double rate, Rng& rng, bool training);

    // losses (elementwise / per-row; reduce with sum())
    Var smooth_l1(Var x);
    Var bce_with_logits(Var logits, Tensor targets);
    Var softmax_ce(Var logits, std::vector<int> target_class);  // per-row losses
    Var softmax_rows(Var logits);

    void backward(Var loss);

    std::size_t size() const { return nodes_.size(); }

private:
    friend struct Var;

    struct Node {
        Tensor val;
        Tensor grad;
        std::function<void(Graph&)> back;  // empty for leaves
        bool needs = false;
        Parameter* bound = nullptr;
    };

    int push(Tensor val, bool needs, std::function<void(Graph&)> back = nullptr);
    Node& node(Var v);
    const Node& node(Var v) const;
    bool needs(Var v) const { return node(v).needs; }

    std::vector<std::unique_ptr<Node>> nodes_;
};

// Central-difference gradient of f at x (test oracle helper).
double central_difference(const std::function<double(double)>& f, double x, double h);

}  // namespace noddet::nn
