#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "noddet/errors.hpp"
#include "noddet/nn/autograd.hpp"

namespace noddet::nn {

namespace {

// Accumulates w-weighted input rows into output rows for one (oc, ic, ky, kx)
// kernel tap; shared by conv forward and conv-transpose backward-to-input.
inline void conv_tap_forward(const double* x, double* out, double wv, int H, int W, int Ho,
                             int Wo, int stride, int pad, int ky, int kx) {
    for (int oy = 0; oy < Ho; ++oy) {
        const int iy = oy * stride + ky - pad;
        if (iy < 0 || iy >= H) continue;
        const double* xrow = x + static_cast<std::int64_t>(iy) * W;
        double* orow = out + static_cast<std::int64_t>(oy) * Wo;
        // valid ox range: 0 <= ox*stride + kx - pad < W
        int ox0 = 0;
        while (ox0 * stride + kx - pad < 0) ++ox0;
        int ox1 = Wo - 1;
        while (ox1 >= 0 && ox1 * stride + kx - pad >= W) --ox1;
        for (int ox = ox0; ox <= ox1; ++ox) orow[ox] += wv * xrow[ox * stride + kx - pad];
    }
}

}  // namespace

Var Graph::conv2d(Var x, Var w, Var b, int stride, int pad, int groups) {
    const Tensor& vx = value(x);
    const Tensor& vw = value(w);
    if (vx.ndim() != 3 || vw.ndim() != 4) throw std::invalid_argument("conv2d: expects CHW input, OIHW kernel");
    const int Cin = vx.dim(0), H = vx.dim(1), W = vx.dim(2);
    const int Cout = vw.dim(0), Cig = vw.dim(1), Kh = vw.dim(2), Kw = vw.dim(3);
    if (Cin % groups != 0 || Cout % groups != 0 || Cig != Cin / groups)
        throw std::invalid_argument("conv2d: channel/group mismatch");
    const bool has_b = b.valid();
    if (has_b && value(b).numel() != Cout) throw std::invalid_argument("conv2d: bias size mismatch");
    const int Ho = (H + 2 * pad - Kh) / stride + 1;
    const int Wo = (W + 2 * pad - Kw) / stride + 1;
    if (Ho <= 0 || Wo <= 0) throw std::invalid_argument("conv2d: empty output");
    const int oc_per_g = Cout / groups;

    Tensor out({Cout, Ho, Wo});
    const std::int64_t oplane = static_cast<std::int64_t>(Ho) * Wo;
    const std::int64_t iplane = static_cast<std::int64_t>(H) * W;
    for (int oc = 0; oc < Cout; ++oc) {
        double* po = out.data() + oc * oplane;
        if (has_b) {
            const double bv = value(b).at(oc);
            for (std::int64_t i = 0; i < oplane; ++i) po[i] = bv;
        }
        const int gidx = oc / oc_per_g;
        for (int icg = 0; icg < Cig; ++icg) {
            const double* px = vx.data() + (static_cast<std::int64_t>(gidx) * Cig + icg) * iplane;
            for (int ky = 0; ky < Kh; ++ky)
                for (int kx = 0; kx < Kw; ++kx) {
                    const double wv = vw.at(oc, icg, ky, kx);
                    if (wv == 0.0) continue;
                    conv_tap_forward(px, po, wv, H, W, Ho, Wo, stride, pad, ky, kx);
                }
        }
    }

    const bool ng = needs(x) || needs(w) || (has_b && needs(b));
    Var r{this, push(std::move(out), ng)};
    if (ng) {
        node(r).back = [x, w, b, has_b, stride, pad, groups, Cin, H, W, Cout, Cig, Kh, Kw, Ho,
                        Wo, oc_per_g, oplane, iplane, r](Graph& g) {
            const Tensor& go = g.grad(r);
            const Tensor& vx2 = g.value(x);
            const Tensor& vw2 = g.value(w);
            const bool need_x = g.needs(x);
            const bool need_w = g.needs(w);
            Tensor* gx = need_x ? &g.grad(x) : nullptr;
            Tensor* gw = need_w ? &g.grad(w) : nullptr;
            for (int oc = 0; oc < Cout; ++oc) {
                const double* pgo = go.data() + oc * oplane;
                const int gidx = oc / oc_per_g;
                for (int icg = 0; icg < Cig; ++icg) {
                    const int ic = gidx * Cig + icg;
                    const double* px = vx2.data() + ic * iplane;
                    double* pgx = need_x ? gx->data() + ic * iplane : nullptr;
                    for (int ky = 0; ky < Kh; ++ky)
                        for (int kx = 0; kx < Kw; ++kx) {
                            const double wv = vw2.at(oc, icg, ky, kx);
                            double acc = 0.0;
                            for (int oy = 0; oy < Ho; ++oy) {
                                const int iy = oy * stride + ky - pad;
                                if (iy < 0 || iy >= H) continue;
                                const double* gorow = pgo + static_cast<std::int64_t>(oy) * Wo;
                                const double* xrow = px + static_cast<std::int64_t>(iy) * W;
                                double* gxrow =
                                    need_x ? pgx + static_cast<std::int64_t>(iy) * W : nullptr;
                                int ox0 = 0;
                                while (ox0 * stride + kx - pad < 0) ++ox0;
                                int ox1 = Wo - 1;
                                while (ox1 >= 0 && ox1 * stride + kx - pad >= W) --ox1;
                                for (int ox = ox0; ox <= ox1; ++ox) {
                                    const int ix = ox * stride + kx - pad;
                                    const double d = gorow[ox];
                                    if (need_w) acc += d * xrow[ix];
                                    if (need_x) gxrow[ix] += d * wv;
                                }
                            }
                            if (need_w) gw->at(oc, icg, ky, kx) += acc;
                        }
                }
                if (has_b && g.needs(b)) {
                    double acc = 0.0;
                    for (std::int64_t i = 0; i < oplane; ++i) acc += pgo[i];
                    g.grad(b).at(oc) += acc;
                }
            }
        };
    }
    return r;
}

Var Graph::conv2d_transpose2x(Var x, Var w, Var b, int groups) {
    // stride 2, pad 1, output padding 1, 3x3 kernel: H -> 2H exactly
    const Tensor& vx = value(x);
    const Tensor& vw = value(w);
    if (vx.ndim() != 3 || vw.ndim() != 4)
        throw std::invalid_argument("conv2d_transpose2x: expects CHW input, IOHW kernel");
    const int Cin = vx.dim(0), H = vx.dim(1), W = vx.dim(2);
    const int Cog = vw.dim(1), Kh = vw.dim(2), Kw = vw.dim(3);
    if (vw.dim(0) != Cin || Kh != 3 || Kw != 3 || Cin % groups != 0)
        throw std::invalid_argument("conv2d_transpose2x: kernel shape mismatch");
    const int ic_per_g = Cin / groups;
    const int Cout = Cog * groups;
    const bool has_b = b.valid();
    if (has_b && value(b).numel() != Cout)
        throw std::invalid_argument("conv2d_transpose2x: bias size mismatch");
    constexpr int stride = 2, pad = 1;
    const int Ho = 2 * H, Wo = 2 * W;

    Tensor out({Cout, Ho, Wo});
    const std::int64_t oplane = static_cast<std::int64_t>(Ho) * Wo;
    const std::int64_t iplane = static_cast<std::int64_t>(H) * W;
    if (has_b)
        for (int oc = 0; oc < Cout; ++oc) {
            const double bv = value(b).at(oc);
            double* po = out.data() + oc * oplane;
            for (std::int64_t i = 0; i < oplane; ++i) po[i] = bv;
        }
    for (int ic = 0; ic < Cin; ++ic) {
        const int gidx = ic / ic_per_g;
        const double* px = vx.data() + ic * iplane;
        for (int ocg = 0; ocg < Cog; ++ocg) {
            const int oc = gidx * Cog + ocg;
            double* po = out.data() + oc * oplane;
            for (int ky = 0; ky < Kh; ++ky)
                for (int kx = 0; kx < Kw; ++kx) {
                    const double wv = vw.at(ic, ocg, ky, kx);
                    if (wv == 0.0) continue;
                    for (int iy = 0; iy < H; ++iy) {
                        const int oy = iy * stride + ky - pad;
                        if (oy < 0 || oy >= Ho) continue;
                        const double* xrow = px + static_cast<std::int64_t>(iy) * W;
                        double* orow = po + static_cast<std::int64_t>(oy) * Wo;
                        int ix0 = 0;
                        while (ix0 * stride + kx - pad < 0) ++ix0;
                        int ix1 = W - 1;
                        while (ix1 >= 0 && ix1 * stride + kx - pad >= Wo) --ix1;
                        for (int ix = ix0; ix <= ix1; ++ix)
                            orow[ix * stride + kx - pad] += wv * xrow[ix];
                    }
                }
        }
    }

    const bool ng = needs(x) || needs(w) || (has_b && needs(b));
    Var r{this, push(std::move(out), ng)};
    if (ng) {
        node(r).back = [x, w, b, has_b, groups, Cin, H, W, Cog, Ho, Wo, ic_per_g, oplane, iplane,
                        r](Graph& g) {
            constexpr int stride2 = 2, pad2 = 1;
            const Tensor& go = g.grad(r);
            const Tensor& vx2 = g.value(x);
            const Tensor& vw2 = g.value(w);
            const bool need_x = g.needs(x);
            const bool need_w = g.needs(w);
            Tensor* gx = need_x ? &g.grad(x) : nullptr;
            Tensor* gw = need_w ? &g.grad(w) : nullptr;
            for (int ic = 0; ic < Cin; ++ic) {
                const int gidx = ic / ic_per_g;
                const double* px = vx2.data() + ic * iplane;
                double* pgx = need_x ? gx->data() + ic * iplane : nullptr;
                for (int ocg = 0; ocg < Cog; ++ocg) {
                    const int oc = gidx * Cog + ocg;
                    const double* pgo = go.data() + oc * oplane;
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx) {
                            const double wv = vw2.at(ic, ocg, ky, kx);
                            double acc = 0.0;
                            for (int iy = 0; iy < H; ++iy) {
                                const int oy = iy * stride2 + ky - pad2;
                                if (oy < 0 || oy >= Ho) continue;
                                const double* gorow = pgo + static_cast<std::int64_t>(oy) * Wo;
                                const double* xrow = px + static_cast<std::int64_t>(iy) * W;
                                double* gxrow =
                                    need_x ? pgx + static_cast<std::int64_t>(iy) * W : nullptr;
                                int ix0 = 0;
                                while (ix0 * stride2 + kx - pad2 < 0) ++ix0;
                                int ix1 = W - 1;
                                while (ix1 >= 0 && ix1 * stride2 + kx - pad2 >= Wo) --ix1;
                                for (int ix = ix0; ix <= ix1; ++ix) {
                                    const double d = gorow[ix * stride2 + kx - pad2];
                                    if (need_w) acc += d * xrow[ix];
                                    if (need_x) gxrow[ix] += d * wv;
                                }
                            }
                            if (need_w) gw->at(ic, ocg, ky, kx) += acc;
                        }
                }
            }
            if (has_b && g.needs(b)) {
                Tensor& gb = g.grad(b);
                for (int oc = 0; oc < static_cast<int>(gb.numel()); ++oc) {
                    const double* pgo = go.data() + oc * oplane;
                    double acc = 0.0;
                    for (std::int64_t i = 0; i < oplane; ++i) acc += pgo[i];
                    gb.at(oc) += acc;
                }
            }
        };
    }
    return r;
}

Var Graph::maxpool3x3s2(Var x) {
    const Tensor& vx = value(x);
    if (vx.ndim() != 3) throw std::invalid_argument("maxpool3x3s2: expects CHW");
    const int C = vx.dim(0), H = vx.dim(1), W = vx.dim(2);
    constexpr int K = 3, stride = 2, pad = 1;
    const int Ho = (H + 2 * pad - K) / stride + 1;
    const int Wo = (W + 2 * pad - K) / stride + 1;
    Tensor out({C, Ho, Wo});
    auto argmax = std::make_shared<std::vector<std::int64_t>>(
        static_cast<std::size_t>(out.numel()));
    const std::int64_t iplane = static_cast<std::int64_t>(H) * W;
    std::int64_t o = 0;
    for (int c = 0; c < C; ++c) {
        const double* px = vx.data() + c * iplane;
        for (int oy = 0; oy < Ho; ++oy)
            for (int ox = 0; ox < Wo; ++ox, ++o) {
                double best = -std::numeric_limits<double>::infinity();
                std::int64_t best_i = -1;
                for (int ky = 0; ky < K; ++ky) {
                    const int iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= H) continue;
                    for (int kx = 0; kx < K; ++kx) {
                        const int ix = ox * stride + kx - pad;
                        if (ix < 0 || ix >= W) continue;
                        const double v = px[static_cast<std::int64_t>(iy) * W + ix];
                        if (v > best) {
                            best = v;
                            best_i = c * iplane + static_cast<std::int64_t>(iy) * W + ix;
                        }
                    }
                }
                out.at(o) = best;
                (*argmax)[static_cast<std::size_t>(o)] = best_i;
            }
    }
    const bool ng = needs(x);
    Var r{this, push(std::move(out), ng)};
    if (ng) {
        node(r).back = [x, argmax, r](Graph& g) {
            const Tensor& go = g.grad(r);
            Tensor& gx = g.grad(x);
            for (std::int64_t i = 0; i < go.numel(); ++i)
                gx.at((*argmax)[static_cast<std::size_t>(i)]) += go.at(i);
        };
    }
    return r;
}

Var Graph::upsample2_nearest(Var x) {
    const Tensor& vx = value(x);
    if (vx.ndim() != 3) throw std::invalid_argument("upsample2_nearest: expects CHW");
    const int C = vx.dim(0), H = vx.dim(1), W = vx.dim(2);
    Tensor out({C, 2 * H, 2 * W});
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < 2 * H; ++y) {
            const double* src = vx.data() + (static_cast<std::int64_t>(c) * H + y / 2) * W;
            double* dst = out.data() + (static_cast<std::int64_t>(c) * 2 * H + y) * 2 * W;
            for (int xo = 0; xo < 2 * W; ++xo) dst[xo] = src[xo / 2];
        }
    const bool ng = needs(x);
    Var r{this, push(std::move(out), ng)};
    if (ng) {
        node(r).back = [x, C, H, W, r](Graph& g) {
            const Tensor& go = g.grad(r);
            Tensor& gx = g.grad(x);
            for (int c = 0; c < C; ++c)
                for (int y = 0; y < 2 * H; ++y) {
                    const double* src = go.data() + (static_cast<std::int64_t>(c) * 2 * H + y) * 2 * W;
                    double* dst = gx.data() + (static_cast<std::int64_t>(c) * H + y / 2) * W;
                    for (int xo = 0; xo < 2 * W; ++xo) dst[xo / 2] += src[xo];
                }
        };
    }
    return r;
}

Var Graph::roi_align(Var feat, const Box& box, int pool) {
    const Tensor& vf = value(feat);
    if (vf.ndim() != 3) throw std::invalid_argument("roi_align: expects CHW feature");
    if (pool < 1) throw std::invalid_argument("roi_align: pool size must be >= 1");
    const int C = vf.dim(0), H = vf.dim(1), W = vf.dim(2);
    const double bw = box.x2 - box.x1;
    const double bh = box.y2 - box.y1;
    if (bw < 1e-6 || bh < 1e-6) throw DegenerateRoi("roi_align: degenerate box after mapping");

    struct Sample {
        std::int64_t idx[4];
        double wgt[4];
        int n = 0;
    };
    const int P = pool;
    constexpr int S = 2;  // regular 2x2 sample points per bin
    auto samples = std::make_shared<std::vector<Sample>>(static_cast<std::size_t>(P) * P * S * S);

    const double bin_w = bw / P;
    const double bin_h = bh / P;
    const std::int64_t plane = static_cast<std::int64_t>(H) * W;

    // Bilinear taps for one sampling point; points outside the feature extent
    // contribute nothing (zero padding semantics).
    auto make_sample = [&](double sy, double sx) {
        Sample s;
        if (sy <= -1.0 || sy >= H || sx <= -1.0 || sx >= W) return s;
        const int y0 = static_cast<int>(std::floor(sy));
        const int x0 = static_cast<int>(std::floor(sx));
        const double fy = sy - y0;
        const double fx = sx - x0;
        const int ys[2] = {y0, y0 + 1};
        const int xs[2] = {x0, x0 + 1};
        const double wy[2] = {1.0 - fy, fy};
        const double wx[2] = {1.0 - fx, fx};
        for (int a = 0; a < 2; ++a)
            for (int bb = 0; bb < 2; ++bb) {
                if (ys[a] < 0 || ys[a] >= H || xs[bb] < 0 || xs[bb] >= W) continue;
                const double wgt = wy[a] * wx[bb];
                if (wgt == 0.0) continue;
                s.idx[s.n] = static_cast<std::int64_t>(ys[a]) * W + xs[bb];
                s.wgt[s.n] = wgt;
                ++s.n;
            }
        return s;
    };

    std::size_t si = 0;
    for (int py = 0; py < P; ++py)
        for (int px = 0; px < P; ++px)
            for (int sy = 0; sy < S; ++sy)
                for (int sx = 0; sx < S; ++sx, ++si) {
                    const double yy = box.y1 + (py + (sy + 0.5) / S) * bin_h;
                    const double xx = box.x1 + (px + (sx + 0.5) / S) * bin_w;
                    (*samples)[si] = make_sample(yy, xx);
                }

    Tensor out({C, P, P});
    const double inv_ns = 1.0 / (S * S);
    for (int c = 0; c < C; ++c) {
        const double* pf = vf.data() + c * plane;
        double* po = out.data() + static_cast<std::int64_t>(c) * P * P;
        si = 0;
        for (int b = 0; b < P * P; ++b) {
            double acc = 0.0;
            for (int k = 0; k < S * S; ++k, ++si) {
                const Sample& s = (*samples)[si];
                for (int t = 0; t < s.n; ++t) acc += s.wgt[t] * pf[s.idx[t]];
            }
            po[b] = acc * inv_ns;
        }
    }

    const bool ng = needs(feat);
    Var r{this, push(std::move(out), ng)};
    if (ng) {
        node(r).back = [feat, samples, C, P, plane, inv_ns, r](Graph& g) {
            constexpr int S2 = 2;
            const Tensor& go = g.grad(r);
            Tensor& gf = g.grad(feat);
            for (int c = 0; c < C; ++c) {
                double* pgf = gf.data() + c * plane;
                const double* pgo = go.data() + static_cast<std::int64_t>(c) * P * P;
                std::size_t si2 = 0;
                for (int b = 0; b < P * P; ++b) {
                    const double d = pgo[b] * inv_ns;
                    for (int k = 0; k < S2 * S2; ++k, ++si2) {
                        const Sample& s = (*samples)[si2];
                        for (int t = 0; t < s.n; ++t) pgf[s.idx[t]] += d * s.wgt[t];
                    }
                }
            }
        };
    }
    return r;
}

}  // namespace noddet::nn
