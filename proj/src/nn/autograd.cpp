#include "noddet/nn/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace noddet::nn {

const Tensor& Var::val() const {
    if (!valid()) throw std::logic_error("Var: dereferencing invalid handle");
    return g->value(*this);
}

int Graph::push(Tensor val, bool needs, std::function<void(Graph&)> back) {
    auto n = std::make_unique<Node>();
    n->val = std::move(val);
    n->needs = needs;
    n->back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

Graph::Node& Graph::node(Var v) {
    if (!v.valid() || v.g != this) throw std::logic_error("Graph: foreign or invalid Var");
    return *nodes_[static_cast<std::size_t>(v.id)];
}

const Graph::Node& Graph::node(Var v) const {
    if (!v.valid() || v.g != this) throw std::logic_error("Graph: foreign or invalid Var");
    return *nodes_[static_cast<std::size_t>(v.id)];
}

Var Graph::leaf(Tensor t) { return Var{this, push(std::move(t), false)}; }

Var Graph::input(Tensor t) { return Var{this, push(std::move(t), true)}; }

Var Graph::param(Parameter& p) {
    int id = push(p.value, true);
    nodes_.back()->bound = &p;
    return Var{this, id};
}

const Tensor& Graph::value(Var v) const { return node(v).val; }

Tensor& Graph::grad(Var v) {
    Node& n = node(v);
    if (!n.grad.same_shape(n.val)) n.grad = Tensor::zeros(n.val.shape);
    return n.grad;
}

void Graph::backward(Var loss) {
    Node& top = node(loss);
    if (top.val.numel() != 1) throw std::invalid_argument("backward: loss must be scalar");
    grad(loss).fill(1.0);
    for (int id = loss.id; id >= 0; --id) {
        Node& n = *nodes_[static_cast<std::size_t>(id)];
        if (!n.needs || n.grad.v.empty()) continue;
        if (n.back) n.back(*this);
        if (n.bound) {
            n.bound->ensure_grad();
            for (std::int64_t i = 0; i < n.grad.numel(); ++i) n.bound->grad.at(i) += n.grad.at(i);
        }
    }
}

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace

Var Graph::add(Var a, Var b) {
    check_same_shape(value(a), value(b), "add");
    Tensor out = value(a);
    const Tensor& vb = value(b);
    for (std::int64_t i = 0; i < out.numel(); ++i) out.at(i) += vb.at(i);
    const bool ng = needs(a) || needs(b);
    Var r{this, push(std::move(out), ng)};
    if (ng) {
        node(r).back = [a, b, r](Graph& g) {
            const Tensor& go = g.grad(r);
            if (g.needs(a)) {
                Tensor& ga = g.grad(a);
                for (std::int64_t i = 0; i < go.numel(); ++i) ga.at(i) += go.at(i);
            }
            if (g.needs(b)) {
                Tensor& gb = g.grad(b);
                for (std::int64_t i = 0; i < go.numel(); ++i) gb.at(i) += go.at(i);
            }
        };
    }
    return r;
}

Var Graph::sub(Var a, Var b) {
    check_same_shape(value(a), value(b), "sub");
    Tensor out = value(a);
    const Tensor& vb = value(b);
    for (std::int64_t i = 0; i < out.numel(); ++i) out.at(i) -= vb.at(i);
    const bool ng = needs(a) || needs(b);
    Var r{this, push(std::move(out), ng)};
    if (ng) {
        node(r).back = [a, b, r](Graph& g) {
            const Tensor& go = g.grad(r);
            if (g.needs(a)) {
                Tensor& ga = g.grad(a);
                for (std::int64_t i = 0; i < go.numel(); ++i) ga.at(i) += go.at(i);
            }
            if (g.needs(b)) {
                Tensor& gb = g.grad(b);
                for (std::int64_t i = 0; i < go.numel(); ++i) gb.at(i) -= go.at(i);
            }
        };
    }
    return r;
}

Var Graph::mul(Var a, Var b) {
    check_same_shape(value(a), value(b), "mul");
    Tensor out = value(a);
    const Tensor& vb = value(b);
    for (std::int64_t i = 0; i < out.numel(); ++i) out.at(i) *= vb.at(i);
    const bool ng = needs(a) || needs(b);
    Var r{this, push(std::move(out), ng)};
    if (ng) {
        node(r).back = [a, b, r](Graph& g) {
            const Tensor& go = g.grad(r);
            const Tensor& va = g.value(a);
            const Tensor& vb2 = g.value(b);
            if (g.needs(a)) {
                Tensor& ga = g.grad(a);
                for (std::int64_t i = 0; i < go.numel(); ++i) ga.at(i) += go.at(i) * vb2.at(i);
            }
            if (g.needs(b)) {
                Tensor& gb = g.grad(b);
                for (std::int64_t i = 0; i < go.numel(); ++i) gb.at(i) += go.at(i) * va.at(i);
            }
        };
    }
    return r;
}

Var Graph::scale(Var a, double c) {
    Tensor out = value(a);
    for (double& x : out.v) x *= c;
    const bool ng = needs(a);
    Var r{this, push(std::move(out), ng)};
    if (ng) {
        node(r).back = [a, c, r](Graph& g) {
            const Tensor& go = g.grad(r);
            Tensor& ga = g.grad(a);
            for (std::int64_t i = 0; i < go.numel(); ++i) ga.at(i) += c * go.at(i);
        };
    }
    return r;
}

Var Graph::relu(Var a) {
    Tensor out = value(a);
    for (double& x : out.v) x = std::max(0.0, x);
    const bool ng = needs(a);
    Var r{this, push(std::move(out), ng)};
    if (ng) {
        node(r).back = [a, r](Graph& g) {
            const Tensor& go = g.grad(r);
            const Tensor& va = g.value(a);
            Tensor& ga = g.grad(a);
            for (std::int64_t i = 0; i < go.numel(); ++i)
                if (va.at(i) > 0.0) ga.at(i) += go.at(i);
        };
    }
    return r;
}

Var Graph::reshape(Var a, std::vector<int> shape) {
    Tensor out = value(a);
    if (Tensor::count(shape) != out.numel()) throw std::invalid_argument("reshape: element count mismatch");
    out.shape = std::move(shape);
    const bool ng = needs(a);
    Var r{this, push(std::move(out), ng)};
    if (ng) {
        node(r).back = [a, r](Graph& g) {
            const Tensor& go = g.grad(r);
            Tensor& ga = g.grad(a);
            for (std::int64_t i = 0; i < go.numel(); ++i) ga.at(i) += go.at(i);
        };
    }
    return r;
}

Var Graph::sum(Var a) {
    double s = 0.0;
    for (double x : value(a).v) s += x;
    Tensor out({1});
    out.at(0) = s;
    const bool ng = needs(a);
    Var r{this, push(std::move(out), ng)};
    if (ng) {
        node(r).back = [a, r](Graph& g) {
            const double go = g.grad(r).at(0);
            Tensor& ga = g.grad(a);
            for (std::int64_t i = 0; i < ga.numel(); ++i) ga.at(i) += go;
        };
    }
    return r;
}

Var Graph::add_scalars(const std::vector<Var>& xs) {
    if (xs.empty()) throw std::invalid_argument("add_scalars: empty");
    double s = 0.0;
    bool ng = false;
    for (Var x : xs) {
        if (value(x).numel() != 1) throw std::invalid_argument("add_scalars: non-scalar input");
        s += value(x).at(0);
        ng = ng || needs(x);
    }
    Tensor out({1});
    out.at(0) = s;
    Var r{this, push(std::move(out), ng)};
    if (ng) {
        node(r).back = [xs, r](Graph& g) {
            const double go = g.grad(r).at(0);
            for (Var x : xs)
                if (g.needs(x)) g.grad(x).at(0) += go;
        };
    }
    return r;
}

Var Graph::concat_ch(const std::vector<Var>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat_ch: empty");
    int C = 0;
    const Tensor& first = value(xs[0]);
    if (first.ndim() != 3) throw std::invalid_argument("concat_ch: expects CHW tensors");
    const int H = first.dim(1), W = first.dim(2);
    bool ng = false;
    for (Var x : xs) {
        const Tensor& t = value(x);
        if (t.ndim() != 3 || t.dim(1) != H || t.dim(2) != W)
            throw std::invalid_argument("concat_ch: spatial mismatch");
        C += t.dim(0);
        ng = ng || needs(x);
    }
    Tensor out({C, H, W});
    std::int64_t off = 0;
    for (Var x : xs) {
        const Tensor& t = value(x);
        std::copy(t.v.begin(), t.v.end(), out.v.begin() + off);
        off += t.numel();
    }
    Var r{this, push(std::move(out), ng)};
    if (ng) {
        node(r).back = [xs, r](Graph& g) {
            const Tensor& go = g.grad(r);
            std::int64_t off2 = 0;
            for (Var x : xs) {
                const std::int64_t n = g.value(x).numel();
                if (g.needs(x)) {
                    Tensor& gx = g.grad(x);
                    for (std::int64_t i = 0; i < n; ++i) gx.at(i) += go.at(off2 + i);
                }
                off2 += n;
            }
        };
    }
    return r;
}

Var Graph::slice_ch(Var a, int c0, int c1) {
    const Tensor& t = value(a);
    if (t.ndim() != 3) throw std::invalid_argument("slice_ch: expects CHW");
    if (c0 < 0 || c1 > t.dim(0) || c0 >= c1) throw std::invalid_argument("slice_ch: bad channel range");
    const int H = t.dim(1), W = t.dim(2);
    Tensor out({c1 - c0, H, W});
    const std::int64_t plane = static_cast<std::int64_t>(H) * W;
    std::copy(t.v.begin() + c0 * plane, t.v.begin() + c1 * plane, out.v.begin());
    const bool ng = needs(a);
    Var r{this, push(std::move(out), ng)};
    if (ng) {
        node(r).back = [a, c0, plane, r](Graph& g) {
            const Tensor& go = g.grad(r);
            Tensor& ga = g.grad(a);
            for (std::int64_t i = 0; i < go.numel(); ++i) ga.at(c0 * plane + i) += go.at(i);
        };
    }
    return r;
}

Var Graph::concat_rows(const std::vector<Var>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat_rows: empty");
    const Tensor& first = value(xs[0]);
    const int nd = first.ndim();
    if (nd != 1 && nd != 2) throw std::invalid_argument("concat_rows: rank 1 or 2 only");
    const int cols = nd == 2 ? first.dim(1) : 1;
    int rows = 0;
    bool ng = false;
    for (Var x : xs) {
        const Tensor& t = value(x);
        if (t.ndim() != nd || (nd == 2 && t.dim(1) != cols))
            throw std::invalid_argument("concat_rows: shape mismatch");
        rows += t.dim(0);
        ng = ng || needs(x);
    }
    Tensor out(nd == 2 ? std::vector<int>{rows, cols} : std::vector<int>{rows});
    std::int64_t off = 0;
    for (Var x : xs) {
        const Tensor& t = value(x);
        std::copy(t.v.begin(), t.v.end(), out.v.begin() + off);
        off += t.numel();
    }
    Var r{this, push(std::move(out), ng)};
    if (ng) {
        node(r).back = [xs, r](Graph& g) {
            const Tensor& go = g.grad(r);
            std::int64_t off2 = 0;
            for (Var x : xs) {
                const std::int64_t n = g.value(x).numel();
                if (g.needs(x)) {
                    Tensor& gx = g.grad(x);
                    for (std::int64_t i = 0; i < n; ++i) gx.at(i) += go.at(off2 + i);
                }
                off2 += n;
            }
        };
    }
    return r;
}

Var Graph::gather_rows(Var a, std::vector<int> idx) {
    const Tensor& t = value(a);
    const int nd = t.ndim();
    if (nd != 1 && nd != 2) throw std::invalid_argument("gather_rows: rank 1 or 2 only");
    const int cols = nd == 2 ? t.dim(1) : 1;
    const int rows = t.dim(0);
    for (int i : idx)
        if (i < 0 || i >= rows) throw std::invalid_argument("gather_rows: index out of range");
    const int n = static_cast<int>(idx.size());
    Tensor out(nd == 2 ? std::vector<int>{n, cols} : std::vector<int>{n});
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < cols; ++c)
            out.at(static_cast<std::int64_t>(r) * cols + c) =
                t.at(static_cast<std::int64_t>(idx[static_cast<std::size_t>(r)]) * cols + c);
    const bool ng = needs(a);
    Var r{this, push(std::move(out), ng)};
    if (ng) {
        node(r).back = [a, idx = std::move(idx), cols, r](Graph& g) {
            const Tensor& go = g.grad(r);
            Tensor& ga = g.grad(a);
            for (std::size_t i = 0; i < idx.size(); ++i)
                for (int c = 0; c < cols; ++c)
                    ga.at(static_cast<std::int64_t>(idx[i]) * cols + c) +=
                        go.at(static_cast<std::int64_t>(i) * cols + c);
        };
    }
    return r;
}

Var Graph::permute_flat(Var a, std::vector<std::int64_t> src_index, std::vector<int> out_shape) {
    const Tensor& t = value(a);
    if (static_cast<std::int64_t>(src_index.size()) != Tensor::count(out_shape))
        throw std::invalid_argument("permute_flat: index/shape mismatch");
    Tensor out(std::move(out_shape));
    for (std::int64_t i = 0; i < out.numel(); ++i) {
        const std::int64_t s = src_index[static_cast<std::size_t>(i)];
        if (s < 0 || s >= t.numel()) throw std::invalid_argument("permute_flat: index out of range");
        out.at(i) = t.at(s);
    }
    const bool ng = needs(a);
    Var r{this, push(std::move(out), ng)};
    if (ng) {
        node(r).back = [a, src_index = std::move(src_index), r](Graph& g) {
            const Tensor& go = g.grad(r);
            Tensor& ga = g.grad(a);
            for (std::int64_t i = 0; i < go.numel(); ++i)
                ga.at(src_index[static_cast<std::size_t>(i)]) += go.at(i);
        };
    }
    return r;
}

Var Graph::batchnorm(Var x, Var gamma, Var beta, const BatchNormState& state, bool training,
                     double eps, double momentum) {
    const Tensor& t = value(x);
    if (t.ndim() != 3) throw std::invalid_argument("batchnorm: expects CHW");
    const int C = t.dim(0), H = t.dim(1), W = t.dim(2);
    if (value(gamma).numel() != C || value(beta).numel() != C)
        throw std::invalid_argument("batchnorm: scale/shift size mismatch");
    if (!state.running_mean || !state.running_var)
        throw std::invalid_argument("batchnorm: missing running statistics");
    const std::int64_t N = static_cast<std::int64_t>(H) * W;

    auto mean = std::make_shared<std::vector<double>>(C, 0.0);
    auto inv_std = std::make_shared<std::vector<double>>(C, 0.0);
    const Tensor& vg = value(gamma);
    const Tensor& vb = value(beta);
    Tensor out(t.shape);

    if (training) {
        for (int c = 0; c < C; ++c) {
            const double* px = t.data() + c * N;
            double m = 0.0;
            for (std::int64_t i = 0; i < N; ++i) m += px[i];
            m /= static_cast<double>(N);
            double var = 0.0;
            for (std::int64_t i = 0; i < N; ++i) {
                const double d = px[i] - m;
                var += d * d;
            }
            var /= static_cast<double>(N);
            (*mean)[static_cast<std::size_t>(c)] = m;
            (*inv_std)[static_cast<std::size_t>(c)] = 1.0 / std::sqrt(var + eps);
            state.running_mean->value.at(c) =
                (1.0 - momentum) * state.running_mean->value.at(c) + momentum * m;
            state.running_var->value.at(c) =
                (1.0 - momentum) * state.running_var->value.at(c) + momentum * var;
        }
    } else {
        for (int c = 0; c < C; ++c) {
            (*mean)[static_cast<std::size_t>(c)] = state.running_mean->value.at(c);
            (*inv_std)[static_cast<std::size_t>(c)] =
                1.0 / std::sqrt(state.running_var->value.at(c) + eps);
        }
    }

    for (int c = 0; c < C; ++c) {
        const double m = (*mean)[static_cast<std::size_t>(c)];
        const double is = (*inv_std)[static_cast<std::size_t>(c)];
        const double gsc = vg.at(c), bsh = vb.at(c);
        const double* px = t.data() + c * N;
        double* po = out.data() + c * N;
        for (std::int64_t i = 0; i < N; ++i) po[i] = (px[i] - m) * is * gsc + bsh;
    }

    const bool ng = needs(x) || needs(gamma) || needs(beta);
    Var r{this, push(std::move(out), ng)};
    if (ng) {
        node(r).back = [x, gamma, beta, mean, inv_std, training, C, N, r](Graph& g) {
            const Tensor& go = g.grad(r);
            const Tensor& vx = g.value(x);
            const Tensor& vg2 = g.value(gamma);
            for (int c = 0; c < C; ++c) {
                const double m = (*mean)[static_cast<std::size_t>(c)];
                const double is = (*inv_std)[static_cast<std::size_t>(c)];
                const double gsc = vg2.at(c);
                const double* px = vx.data() + c * N;
                const double* pgo = go.data() + c * N;
                double sum_dy = 0.0, sum_dy_xhat = 0.0;
                for (std::int64_t i = 0; i < N; ++i) {
                    sum_dy += pgo[i];
                    sum_dy_xhat += pgo[i] * (px[i] - m) * is;
                }
                if (g.needs(gamma)) g.grad(gamma).at(c) += sum_dy_xhat;
                if (g.needs(beta)) g.grad(beta).at(c) += sum_dy;
                if (g.needs(x)) {
                    double* pgx = g.grad(x).data() + c * N;
                    if (training) {
                        // d/dx of batch-statistics normalization
                        const double inv_n = 1.0 / static_cast<double>(N);
                        for (std::int64_t i = 0; i < N; ++i) {
                            const double xhat = (px[i] - m) * is;
                            pgx[i] += gsc * is * (pgo[i] - inv_n * sum_dy - xhat * inv_n * sum_dy_xhat);
                        }
                    } else {
                        for (std::int64_t i = 0; i < N; ++i) pgx[i] += gsc * is * pgo[i];
                    }
                }
            }
        };
    }
    return r;
}

Var Graph::linear(Var x, Var w, Var b) {
    const Tensor& vx = value(x);
    const Tensor& vw = value(w);
    if (vx.ndim() != 2 || vw.ndim() != 2) throw std::invalid_argument("linear: expects matrices");
    const int R = vx.dim(0), In = vx.dim(1), Out = vw.dim(0);
    if (vw.dim(1) != In) throw std::invalid_argument("linear: weight/input width mismatch");
    const bool has_b = b.valid();
    if (has_b && value(b).numel() != Out) throw std::invalid_argument("linear: bias size mismatch");

    Tensor out({R, Out});
    for (int r = 0; r < R; ++r) {
        const double* px = vx.data() + static_cast<std::int64_t>(r) * In;
        double* po = out.data() + static_cast<std::int64_t>(r) * Out;
        for (int o = 0; o < Out; ++o) {
            const double* pw = vw.data() + static_cast<std::int64_t>(o) * In;
            double acc = has_b ? value(b).at(o) : 0.0;
            for (int i = 0; i < In; ++i) acc += px[i] * pw[i];
            po[o] = acc;
        }
    }
    const bool ng = needs(x) || needs(w) || (has_b && needs(b));
    Var rv{this, push(std::move(out), ng)};
    if (ng) {
        node(rv).back = [x, w, b, has_b, R, In, Out, rv](Graph& g) {
            const Tensor& go = g.grad(rv);
            const Tensor& vx2 = g.value(x);
            const Tensor& vw2 = g.value(w);
            if (g.needs(x)) {
                Tensor& gx = g.grad(x);
                for (int r = 0; r < R; ++r)
                    for (int o = 0; o < Out; ++o) {
                        const double d = go.at(static_cast<std::int64_t>(r) * Out + o);
                        if (d == 0.0) continue;
                        const double* pw = vw2.data() + static_cast<std::int64_t>(o) * In;
                        double* pgx = gx.data() + static_cast<std::int64_t>(r) * In;
                        for (int i = 0; i < In; ++i) pgx[i] += d * pw[i];
                    }
            }
            if (g.needs(w)) {
                Tensor& gw = g.grad(w);
                for (int r = 0; r < R; ++r)
                    for (int o = 0; o < Out; ++o) {
                        const double d = go.at(static_cast<std::int64_t>(r) * Out + o);
                        if (d == 0.0) continue;
                        const double* px = vx2.data() + static_cast<std::int64_t>(r) * In;
                        double* pgw = gw.data() + static_cast<std::int64_t>(o) * In;
                        for (int i = 0; i < In; ++i) pgw[i] += d * px[i];
                    }
            }
            if (has_b && g.needs(b)) {
                Tensor& gb = g.grad(b);
                for (int r = 0; r < R; ++r)
                    for (int o = 0; o < Out; ++o)
                        gb.at(o) += go.at(static_cast<std::int64_t>(r) * Out + o);
            }
        };
    }
    return rv;
}

Var Graph::dropout(Var x, double rate, Rng& rng, bool training) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0, 1)");
    if (!training || rate == 0.0) return x;
    const Tensor& vx = value(x);
    auto mask = std::make_shared<std::vector<double>>(static_cast<std::size_t>(vx.numel()));
    const double keep_scale = 1.0 / (1.0 - rate);
    Tensor out(vx.shape);
    for (std::int64_t i = 0; i < vx.numel(); ++i) {
        const double m = rng.uniform() >= rate ? keep_scale : 0.0;
        (*mask)[static_cast<std::size_t>(i)] = m;
        out.at(i) = vx.at(i) * m;
    }
    const bool ng = needs(x);
    Var r{this, push(std::move(out), ng)};
    if (ng) {
        node(r).back = [x, mask, r](Graph& g) {
            const Tensor& go = g.grad(r);
            Tensor& gx = g.grad(x);
            for (std::int64_t i = 0; i < go.numel(); ++i)
                gx.at(i) += go.at(i) * (*mask)[static_cast<std::size_t>(i)];
        };
    }
    return r;
}

Var Graph::smooth_l1(Var x) {
    const Tensor& vx = value(x);
    Tensor out(vx.shape);
    for (std::int64_t i = 0; i < vx.numel(); ++i) {
        const double a = std::abs(vx.at(i));
        out.at(i) = a < 1.0 ? 0.5 * vx.at(i) * vx.at(i) : a - 0.5;
    }
    const bool ng = needs(x);
    Var r{this, push(std::move(out), ng)};
    if (ng) {
        node(r).back = [x, r](Graph& g) {
            const Tensor& go = g.grad(r);
            const Tensor& vx2 = g.value(x);
            Tensor& gx = g.grad(x);
            for (std::int64_t i = 0; i < go.numel(); ++i) {
                const double v = vx2.at(i);
                const double d = std::abs(v) < 1.0 ? v : (v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0));
                gx.at(i) += go.at(i) * d;
            }
        };
    }
    return r;
}

Var Graph::bce_with_logits(Var logits, Tensor targets) {
    const Tensor& vz = value(logits);
    check_same_shape(vz, targets, "bce_with_logits");
    Tensor out(vz.shape);
    for (std::int64_t i = 0; i < vz.numel(); ++i) {
        const double z = vz.at(i), t = targets.at(i);
        // max(z,0) - z*t + log(1 + exp(-|z|)), numerically stable
        out.at(i) = std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
    }
    const bool ng = needs(logits);
    Var r{this, push(std::move(out), ng)};
    if (ng) {
        node(r).back = [logits, targets = std::move(targets), r](Graph& g) {
            const Tensor& go = g.grad(r);
            const Tensor& vz2 = g.value(logits);
            Tensor& gz = g.grad(logits);
            for (std::int64_t i = 0; i < go.numel(); ++i) {
                const double sig = 1.0 / (1.0 + std::exp(-vz2.at(i)));
                gz.at(i) += go.at(i) * (sig - targets.at(i));
            }
        };
    }
    return r;
}

Var Graph::softmax_ce(Var logits, std::vector<int> target_class) {
    const Tensor& vz = value(logits);
    if (vz.ndim() != 2) throw std::invalid_argument("softmax_ce: expects R x C logits");
    const int R = vz.dim(0), C = vz.dim(1);
    if (static_cast<int>(target_class.size()) != R)
        throw std::invalid_argument("softmax_ce: target count mismatch");
    for (int t : target_class)
        if (t < 0 || t >= C) throw std::invalid_argument("softmax_ce: target class out of range");
    Tensor out({R});
    for (int r = 0; r < R; ++r) {
        const double* pz = vz.data() + static_cast<std::int64_t>(r) * C;
        double m = pz[0];
        for (int c = 1; c < C; ++c) m = std::max(m, pz[c]);
        double lse = 0.0;
        for (int c = 0; c < C; ++c) lse += std::exp(pz[c] - m);
        lse = m + std::log(lse);
        out.at(r) = lse - pz[target_class[static_cast<std::size_t>(r)]];
    }
    const bool ng = needs(logits);
    Var rv{this, push(std::move(out), ng)};
    if (ng) {
        node(rv).back = [logits, target_class = std::move(target_class), R, C, rv](Graph& g) {
            const Tensor& go = g.grad(rv);
            const Tensor& vz2 = g.value(logits);
            Tensor& gz = g.grad(logits);
            for (int r = 0; r < R; ++r) {
                const double* pz = vz2.data() + static_cast<std::int64_t>(r) * C;
                double m = pz[0];
                for (int c = 1; c < C; ++c) m = std::max(m, pz[c]);
                double denom = 0.0;
                for (int c = 0; c < C; ++c) denom += std::exp(pz[c] - m);
                const double d = go.at(r);
                double* pgz = gz.data() + static_cast<std::int64_t>(r) * C;
                for (int c = 0; c < C; ++c) {
                    const double p = std::exp(pz[c] - m) / denom;
                    pgz[c] += d * (p - (c == target_class[static_cast<std::size_t>(r)] ? 1.0 : 0.0));
                }
            }
        };
    }
    return rv;
}

Var Graph::softmax_rows(Var logits) {
    const Tensor& vz = value(logits);
    if (vz.ndim() != 2) throw std::invalid_argument("softmax_rows: expects R x C logits");
    const int R = vz.dim(0), C = vz.dim(1);
    Tensor out({R, C});
    for (int r = 0; r < R; ++r) {
        const double* pz = vz.data() + static_cast<std::int64_t>(r) * C;
        double* po = out.data() + static_cast<std::int64_t>(r) * C;
        double m = pz[0];
        for (int c = 1; c < C; ++c) m = std::max(m, pz[c]);
        double denom = 0.0;
        for (int c = 0; c < C; ++c) {
            po[c] = std::exp(pz[c] - m);
            denom += po[c];
        }
        for (int c = 0; c < C; ++c) po[c] /= denom;
    }
    const bool ng = needs(logits);
    Var rv{this, push(std::move(out), ng)};
    if (ng) {
        node(rv).back = [logits, R, C, rv](Graph& g) {
            const Tensor& go = g.grad(rv);
            const Tensor& p = g.value(rv);
            Tensor& gz = g.grad(logits);
            for (int r = 0; r < R; ++r) {
                const double* pp = p.data() + static_cast<std::int64_t>(r) * C;
                const double* pgo = go.data() + static_cast<std::int64_t>(r) * C;
                double dot = 0.0;
                for (int c = 0; c < C; ++c) dot += pgo[c] * pp[c];
                double* pgz = gz.data() + static_cast<std::int64_t>(r) * C;
                for (int c = 0; c < C; ++c) pgz[c] += pp[c] * (pgo[c] - dot);
            }
        };
    }
    return rv;
}

double central_difference(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace noddet::nn
