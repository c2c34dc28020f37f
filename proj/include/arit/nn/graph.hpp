#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "arit/nn/tensor.hpp"

namespace arit::nn {

// Reverse-mode tape. Nodes are created in topological order (an op's inputs
// always exist before the op itself), so backward is a single reverse sweep
// over the creation sequence. One Graph instance covers one training step;
// parameter gradients accumulate directly into Param::grad.
template <typename S>
struct Node {
    Tensor<S> value;
    Tensor<S> grad;          // allocated lazily; empty until first touched
    bool needs_grad = true;  // false for detached / constant nodes
    std::function<void(Node<S>&)> backward_fn; // empty for leaves

    bool has_grad() const { return !grad.data.empty(); }
    void ensure_grad() {
        if (!has_grad()) grad = Tensor<S>(value.n, value.c, value.h, value.w, S(0));
    }
};

// Accumulates into dst->grad unless dst is detached.
template <typename S>
inline void add_grad(Node<S>* dst, const Tensor<S>& g) {
    if (!dst->needs_grad) return;
    dst->ensure_grad();
    for (size_t i = 0; i < g.data.size(); ++i) dst->grad.data[i] += g.data[i];
}

template <typename S>
class Graph {
public:
    using NodeP = Node<S>*;

    NodeP leaf(Tensor<S> value, bool needs_grad = false) {
        return make(std::move(value), needs_grad, {});
    }

    NodeP constant(Tensor<S> value) { return leaf(std::move(value), false); }

    NodeP make(Tensor<S> value, bool needs_grad, std::function<void(Node<S>&)> backward_fn) {
        auto node = std::make_unique<Node<S>>();
        node->value = std::move(value);
        node->needs_grad = needs_grad;
        if (needs_grad) node->backward_fn = std::move(backward_fn);
        nodes_.push_back(std::move(node));
        return nodes_.back().get();
    }

    // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse creation
    // order. Nodes that never received a gradient are skipped, so one graph
    // may hold several independent losses; call backward once per loss.
    void backward(NodeP loss) {
        if (loss->value.size() != 1) throw DataError("backward: loss must be scalar");
        loss->ensure_grad();
        loss->grad.data[0] += S(1);
        for (size_t i = nodes_.size(); i-- > 0;) {
            Node<S>* node = nodes_[i].get();
            if (node->needs_grad && node->has_grad() && node->backward_fn)
                node->backward_fn(*node);
        }
    }

    size_t node_count() const { return nodes_.size(); }

private:
    std::vector<std::unique_ptr<Node<S>>> nodes_;
};

namespace ops {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using MatXR = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// ---- convolution -----------------------------------------------------------

// Valid output-column range [ox0, ox1) for one kernel column kx, i.e. the
// ox for which ix = ox*stride - pad + kx lands inside [0, w).
inline std::pair<int, int> conv_valid_run(int w, int ow, int stride, int pad, int kx) {
    int ox0 = pad > kx ? (pad - kx + stride - 1) / stride : 0;
    const int num = w - 1 + pad - kx;
    int ox1 = num < 0 ? 0 : num / stride + 1;
    if (ox0 > ow) ox0 = ow;
    if (ox1 > ow) ox1 = ow;
    if (ox1 < ox0) ox1 = ox0;
    return {ox0, ox1};
}

// Patch matrix in "locations x kernel" layout: column (ch*k + ky)*k + kx holds
// the input value at kernel offset (ky, kx) for every output location, in
// (n, oy, ox) order. Every column is then a shifted copy of an input plane, so
// construction, its adjoint, and both GEMM operands stream contiguously.
template <typename S>
inline void im2col(const Tensor<S>& x, int k, int stride, int pad, int oh, int ow,
                   MatX<S>& colT) {
    const ptrdiff_t locs = ptrdiff_t(x.n) * oh * ow;
    colT.resize(locs, ptrdiff_t(x.c) * k * k);
    const size_t plane = size_t(x.h) * x.w;
    for (int ch = 0; ch < x.c; ++ch)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                S* dst = colT.data() + size_t((ch * k + ky) * k + kx) * size_t(locs);
                const auto [ox0, ox1] = conv_valid_run(x.w, ow, stride, pad, kx);
                for (int in = 0; in < x.n; ++in) {
                    const S* src = &x.data[(size_t(in) * x.c + ch) * plane];
                    for (int oy = 0; oy < oh; ++oy, dst += ow) {
                        const int iy = oy * stride - pad + ky;
                        if (iy < 0 || iy >= x.h) {
                            std::fill(dst, dst + ow, S(0));
                            continue;
                        }
                        const S* srow = src + size_t(iy) * x.w;
                        std::fill(dst, dst + ox0, S(0));
                        if (stride == 1) {
                            std::copy(srow + ox0 - pad + kx, srow + ox1 - pad + kx, dst + ox0);
                        } else {
                            const S* sp = srow + ptrdiff_t(ox0) * stride - pad + kx;
                            for (int ox = ox0; ox < ox1; ++ox, sp += stride) dst[ox] = *sp;
                        }
                        std::fill(dst + ox1, dst + ow, S(0));
                    }
                }
            }
}

// Adjoint of im2col for the same layout: scatter-adds each column back into
// the input gradient.
template <typename S>
inline void col2im_add(const MatX<S>& colT, int k, int stride, int pad, int oh, int ow,
                       Tensor<S>& gx) {
    const ptrdiff_t locs = ptrdiff_t(gx.n) * oh * ow;
    const size_t plane = size_t(gx.h) * gx.w;
    for (int ch = 0; ch < gx.c; ++ch)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const S* src = colT.data() + size_t((ch * k + ky) * k + kx) * size_t(locs);
                const auto [ox0, ox1] = conv_valid_run(gx.w, ow, stride, pad, kx);
                for (int in = 0; in < gx.n; ++in) {
                    S* dstp = &gx.data[(size_t(in) * gx.c + ch) * plane];
                    for (int oy = 0; oy < oh; ++oy, src += ow) {
                        const int iy = oy * stride - pad + ky;
                        if (iy < 0 || iy >= gx.h) continue;
                        S* drow = dstp + size_t(iy) * gx.w;
                        if (stride == 1) {
                            S* dp = drow + ox0 - pad + kx;
                            for (int ox = ox0; ox < ox1; ++ox) dp[ox - ox0] += src[ox];
                        } else {
                            S* dp = drow + ptrdiff_t(ox0) * stride - pad + kx;
                            for (int ox = ox0; ox < ox1; ++ox, dp += stride) *dp += src[ox];
                        }
                    }
                }
            }
}

// weight shape [out_c, in_c*k*k]; bias may be null. The im2col matrix is
// rebuilt during backward from the stored input instead of kept alive,
// trading a little compute for a much smaller live set.
template <typename S>
inline Node<S>* conv2d(Graph<S>& g, Node<S>* x, Param<S>& weight, Param<S>* bias, int k,
                       int stride, int pad) {
    const Tensor<S>& xv = x->value;
    const int out_c = weight.shape[0];
    if (weight.shape[1] != xv.c * k * k) throw DataError("conv2d: weight/input mismatch");
    const int oh = (xv.h + 2 * pad - k) / stride + 1;
    const int ow = (xv.w + 2 * pad - k) / stride + 1;
    if (oh <= 0 || ow <= 0) throw DataError("conv2d: empty output");

    MatX<S> colT;
    im2col(xv, k, stride, pad, oh, ow, colT);
    Eigen::Map<const MatXR<S>> wmat(weight.value.data(), out_c, weight.shape[1]);
    MatX<S> yT(colT.rows(), out_c);
    yT.noalias() = colT * wmat.transpose();

    // column oc of yT is the oc output plane of every sample back to back
    Tensor<S> out(xv.n, out_c, oh, ow);
    const size_t oplane = size_t(oh) * ow;
    for (int oc = 0; oc < out_c; ++oc) {
        const S b = bias ? bias->value[size_t(oc)] : S(0);
        const S* src = yT.data() + size_t(oc) * size_t(yT.rows());
        for (int in = 0; in < xv.n; ++in) {
            S* dst = &out.data[(size_t(in) * out_c + oc) * oplane];
            const S* s = src + size_t(in) * oplane;
            for (size_t i = 0; i < oplane; ++i) dst[i] = s[i] + b;
        }
    }

    Param<S>* wp = &weight;
    Param<S>* bp = bias;
    return g.make(std::move(out), true, [x, wp, bp, k, stride, pad, oh, ow](Node<S>& self) {
        const Tensor<S>& xv = x->value;
        const int out_c = wp->shape[0];
        const ptrdiff_t locs = ptrdiff_t(xv.n) * oh * ow;
        const size_t oplane = size_t(oh) * ow;
        MatX<S> gyT(locs, out_c);
        for (int oc = 0; oc < out_c; ++oc) {
            S* dst = gyT.data() + size_t(oc) * size_t(locs);
            for (int in = 0; in < xv.n; ++in)
                std::copy(&self.grad.data[(size_t(in) * out_c + oc) * oplane],
                          &self.grad.data[(size_t(in) * out_c + oc) * oplane] + oplane,
                          dst + size_t(in) * oplane);
        }
        MatX<S> colT;
        im2col(xv, k, stride, pad, oh, ow, colT);
        Eigen::Map<MatXR<S>> gw(wp->grad.data(), out_c, wp->shape[1]);
        gw.noalias() += gyT.transpose() * colT;
        if (bp)
            for (int oc = 0; oc < out_c; ++oc) bp->grad[oc] += gyT.col(oc).sum();
        if (x->needs_grad) {
            Eigen::Map<const MatXR<S>> wmat(wp->value.data(), out_c, wp->shape[1]);
            MatX<S> gcolT(locs, wp->shape[1]);
            gcolT.noalias() = gyT * wmat;
            x->ensure_grad();
            col2im_add(gcolT, k, stride, pad, oh, ow, x->grad);
        }
    });
}

// ---- normalization ---------------------------------------------------------

// Per-sample, per-channel standardization over the spatial extent; no affine
// parameters. Variance is the biased (population) estimate.
template <typename S>
inline Node<S>* instance_norm(Graph<S>& g, Node<S>* x, S eps = S(1e-5)) {
    const Tensor<S>& xv = x->value;
    const int m = xv.h * xv.w;
    Tensor<S> out(xv.n, xv.c, xv.h, xv.w);
    auto stats = std::make_shared<std::vector<std::pair<S, S>>>(); // (mean, invstd)
    stats->resize(size_t(xv.n) * xv.c);
    for (int in = 0; in < xv.n; ++in)
        for (int ch = 0; ch < xv.c; ++ch) {
            const S* px = &xv.data[(size_t(in) * xv.c + ch) * m];
            S mu = 0;
            for (int i = 0; i < m; ++i) mu += px[i];
            mu /= S(m);
            S var = 0;
            for (int i = 0; i < m; ++i) var += (px[i] - mu) * (px[i] - mu);
            var /= S(m);
            const S inv = S(1) / std::sqrt(var + eps);
            (*stats)[size_t(in) * xv.c + ch] = {mu, inv};
            S* po = &out.data[(size_t(in) * xv.c + ch) * m];
            for (int i = 0; i < m; ++i) po[i] = (px[i] - mu) * inv;
        }
    return g.make(std::move(out), x->needs_grad, [x, stats](Node<S>& self) {
        const Tensor<S>& xv = x->value;
        const int m = xv.h * xv.w;
        x->ensure_grad();
        for (int in = 0; in < xv.n; ++in)
            for (int ch = 0; ch < xv.c; ++ch) {
                const auto [mu, inv] = (*stats)[size_t(in) * xv.c + ch];
                const S* px = &xv.data[(size_t(in) * xv.c + ch) * m];
                const S* pg = &self.grad.data[(size_t(in) * xv.c + ch) * m];
                S* gx = &x->grad.data[(size_t(in) * xv.c + ch) * m];
                S gmean = 0, gdot = 0;
                for (int i = 0; i < m; ++i) {
                    gmean += pg[i];
                    gdot += pg[i] * (px[i] - mu) * inv;
                }
                gmean /= S(m);
                gdot /= S(m);
                for (int i = 0; i < m; ++i) {
                    const S xhat = (px[i] - mu) * inv;
                    gx[i] += inv * (pg[i] - gmean - xhat * gdot);
                }
            }
    });
}

// ---- elementwise -----------------------------------------------------------

template <typename S, typename F, typename DF>
inline Node<S>* unary(Graph<S>& g, Node<S>* x, F f, DF df) {
    Tensor<S> out(x->value.n, x->value.c, x->value.h, x->value.w);
    for (size_t i = 0; i < out.size(); ++i) out.data[i] = f(x->value.data[i]);
    return g.make(std::move(out), x->needs_grad, [x, df](Node<S>& self) {
        x->ensure_grad();
        for (size_t i = 0; i < self.value.size(); ++i)
            x->grad.data[i] += self.grad.data[i] * df(x->value.data[i], self.value.data[i]);
    });
}

template <typename S>
inline Node<S>* relu(Graph<S>& g, Node<S>* x) {
    return unary(g, x, [](S v) { return v > 0 ? v : S(0); },
                 [](S v, S) { return v > 0 ? S(1) : S(0); });
}

template <typename S>
inline Node<S>* leaky_relu(Graph<S>& g, Node<S>* x, S slope = S(0.2)) {
    return unary(g, x, [slope](S v) { return v > 0 ? v : slope * v; },
                 [slope](S v, S) { return v > 0 ? S(1) : slope; });
}

template <typename S>
inline Node<S>* tanh_op(Graph<S>& g, Node<S>* x) {
    return unary(g, x, [](S v) { return std::tanh(v); }, [](S, S y) { return S(1) - y * y; });
}

template <typename S>
inline Node<S>* sigmoid_op(Graph<S>& g, Node<S>* x) {
    return unary(g, x, [](S v) { return S(1) / (S(1) + std::exp(-v)); },
                 [](S, S y) { return y * (S(1) - y); });
}

template <typename S>
inline Node<S>* softplus_op(Graph<S>& g, Node<S>* x) {
    return unary(g, x,
                 [](S v) { return v > S(20) ? v : std::log1p(std::exp(v)); },
                 [](S v, S) { return S(1) / (S(1) + std::exp(-v)); });
}

template <typename S>
inline Node<S>* abs_op(Graph<S>& g, Node<S>* x) {
    return unary(g, x, [](S v) { return std::abs(v); },
                 [](S v, S) { return v > 0 ? S(1) : (v < 0 ? S(-1) : S(0)); });
}

// y = a*x + b with scalar constants (used for [0,1] <-> [-1,1] remaps).
template <typename S>
inline Node<S>* affine(Graph<S>& g, Node<S>* x, S a, S b) {
    return unary(g, x, [a, b](S v) { return a * v + b; }, [a](S, S) { return a; });
}

// log(max(x, floor)); gradient passes only through the unclamped region.
template <typename S>
inline Node<S>* log_clamped(Graph<S>& g, Node<S>* x, S floor_val) {
    return unary(g, x, [floor_val](S v) { return std::log(std::max(v, floor_val)); },
                 [floor_val](S v, S) { return v > floor_val ? S(1) / v : S(0); });
}

template <typename S>
inline Node<S>* add(Graph<S>& g, Node<S>* a, Node<S>* b) {
    if (!a->value.same_shape(b->value)) throw DataError("add: shape mismatch");
    Tensor<S> out = a->value;
    for (size_t i = 0; i < out.size(); ++i) out.data[i] += b->value.data[i];
    return g.make(std::move(out), a->needs_grad || b->needs_grad, [a, b](Node<S>& self) {
        add_grad(a, self.grad);
        add_grad(b, self.grad);
    });
}

template <typename S>
inline Node<S>* sub(Graph<S>& g, Node<S>* a, Node<S>* b) {
    if (!a->value.same_shape(b->value)) throw DataError("sub: shape mismatch");
    Tensor<S> out = a->value;
    for (size_t i = 0; i < out.size(); ++i) out.data[i] -= b->value.data[i];
    return g.make(std::move(out), a->needs_grad || b->needs_grad, [a, b](Node<S>& self) {
        add_grad(a, self.grad);
        if (b->needs_grad) {
            b->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) b->grad.data[i] -= self.grad.data[i];
        }
    });
}

// Detached copy: a constant with the same value, cutting gradient flow.
template <typename S>
inline Node<S>* stopgrad(Graph<S>& g, Node<S>* x) {
    return g.leaf(x->value, false);
}

// ---- resampling -------------------------------------------------------------

template <typename S>
inline Node<S>* upsample2(Graph<S>& g, Node<S>* x) {
    const Tensor<S>& xv = x->value;
    Tensor<S> out(xv.n, xv.c, xv.h * 2, xv.w * 2);
    for (int in = 0; in < xv.n; ++in)
        for (int ch = 0; ch < xv.c; ++ch)
            for (int y = 0; y < out.h; ++y)
                for (int xx = 0; xx < out.w; ++xx)
                    out.at(in, ch, y, xx) = xv.at(in, ch, y / 2, xx / 2);
    return g.make(std::move(out), x->needs_grad, [x](Node<S>& self) {
        x->ensure_grad();
        for (int in = 0; in < self.value.n; ++in)
            for (int ch = 0; ch < self.value.c; ++ch)
                for (int y = 0; y < self.value.h; ++y)
                    for (int xx = 0; xx < self.value.w; ++xx)
                        x->grad.at(in, ch, y / 2, xx / 2) += self.grad.at(in, ch, y, xx);
    });
}

// ---- reductions / losses ----------------------------------------------------

template <typename S>
inline Node<S>* mean_all(Graph<S>& g, Node<S>* x) {
    S acc = 0;
    for (S v : x->value.data) acc += v;
    const S inv = S(1) / S(x->value.size());
    Tensor<S> out(1, 1, 1, 1, acc * inv);
    return g.make(std::move(out), x->needs_grad, [x, inv](Node<S>& self) {
        x->ensure_grad();
        const S go = self.grad.data[0] * inv;
        for (size_t i = 0; i < x->grad.size(); ++i) x->grad.data[i] += go;
    });
}

// mean(|a - b|); the L1 workhorse for cycle / paired terms.
template <typename S>
inline Node<S>* l1_mean(Graph<S>& g, Node<S>* a, Node<S>* b) {
    if (!a->value.same_shape(b->value)) throw DataError("l1_mean: shape mismatch");
    S acc = 0;
    for (size_t i = 0; i < a->value.size(); ++i)
        acc += std::abs(a->value.data[i] - b->value.data[i]);
    const S inv = S(1) / S(a->value.size());
    Tensor<S> out(1, 1, 1, 1, acc * inv);
    return g.make(std::move(out), a->needs_grad || b->needs_grad, [a, b, inv](Node<S>& self) {
        const S go = self.grad.data[0] * inv;
        if (a->needs_grad) a->ensure_grad();
        if (b->needs_grad) b->ensure_grad();
        for (size_t i = 0; i < a->value.size(); ++i) {
            const S d = a->value.data[i] - b->value.data[i];
            const S s = d > 0 ? go : (d < 0 ? -go : S(0));
            if (a->needs_grad) a->grad.data[i] += s;
            if (b->needs_grad) b->grad.data[i] -= s;
        }
    });
}

// Euclidean norm over every element, as one scalar.
template <typename S>
inline Node<S>* l2_norm_all(Graph<S>& g, Node<S>* x) {
    S acc = 0;
    for (S v : x->value.data) acc += v * v;
    const S r = std::sqrt(acc);
    Tensor<S> out(1, 1, 1, 1, r);
    return g.make(std::move(out), x->needs_grad, [x, r](Node<S>& self) {
        if (r <= S(0)) return; // subgradient 0 at the origin
        x->ensure_grad();
        const S go = self.grad.data[0] / r;
        for (size_t i = 0; i < x->grad.size(); ++i) x->grad.data[i] += go * x->value.data[i];
    });
}

// Per-channel spatial mean: (n,c,h,w) -> (n,c,1,1).
template <typename S>
inline Node<S>* channel_mean(Graph<S>& g, Node<S>* x) {
    const Tensor<S>& xv = x->value;
    const int m = xv.h * xv.w;
    Tensor<S> out(xv.n, xv.c, 1, 1);
    for (int in = 0; in < xv.n; ++in)
        for (int ch = 0; ch < xv.c; ++ch) {
            S acc = 0;
            const S* p = &xv.data[(size_t(in) * xv.c + ch) * m];
            for (int i = 0; i < m; ++i) acc += p[i];
            out.at(in, ch, 0, 0) = acc / S(m);
        }
    return g.make(std::move(out), x->needs_grad, [x, m](Node<S>& self) {
        x->ensure_grad();
        for (int in = 0; in < self.value.n; ++in)
            for (int ch = 0; ch < self.value.c; ++ch) {
                const S go = self.grad.at(in, ch, 0, 0) / S(m);
                S* p = &x->grad.data[(size_t(in) * x->grad.c + ch) * m];
                for (int i = 0; i < m; ++i) p[i] += go;
            }
    });
}

// Per-channel spatial standard deviation (population variance), (n,c,1,1).
template <typename S>
inline Node<S>* channel_std(Graph<S>& g, Node<S>* x) {
    const Tensor<S>& xv = x->value;
    const int m = xv.h * xv.w;
    Tensor<S> out(xv.n, xv.c, 1, 1);
    auto means = std::make_shared<std::vector<S>>(size_t(xv.n) * xv.c);
    for (int in = 0; in < xv.n; ++in)
        for (int ch = 0; ch < xv.c; ++ch) {
            const S* p = &xv.data[(size_t(in) * xv.c + ch) * m];
            S mu = 0;
            for (int i = 0; i < m; ++i) mu += p[i];
            mu /= S(m);
            S var = 0;
            for (int i = 0; i < m; ++i) var += (p[i] - mu) * (p[i] - mu);
            (*means)[size_t(in) * xv.c + ch] = mu;
            out.at(in, ch, 0, 0) = std::sqrt(var / S(m));
        }
    return g.make(std::move(out), x->needs_grad, [x, m, means](Node<S>& self) {
        x->ensure_grad();
        for (int in = 0; in < self.value.n; ++in)
            for (int ch = 0; ch < self.value.c; ++ch) {
                const S sd = self.value.at(in, ch, 0, 0);
                if (sd <= S(0)) continue;
                const S go = self.grad.at(in, ch, 0, 0) / (S(m) * sd);
                const S mu = (*means)[size_t(in) * x->grad.c + ch];
                const S* px = &x->value.data[(size_t(in) * x->grad.c + ch) * m];
                S* gx = &x->grad.data[(size_t(in) * x->grad.c + ch) * m];
                for (int i = 0; i < m; ++i) gx[i] += go * (px[i] - mu);
            }
    });
}

// ---- feature-location plumbing ----------------------------------------------

struct Location {
    int n, y, x;
};

// Plucks feature vectors at given spatial positions: (N,C,H,W) -> (P,C,1,1).
template <typename S>
inline Node<S>* gather_locations(Graph<S>& g, Node<S>* x, std::vector<Location> locs) {
    const Tensor<S>& xv = x->value;
    Tensor<S> out(int(locs.size()), xv.c, 1, 1);
    for (size_t p = 0; p < locs.size(); ++p) {
        const auto& l = locs[p];
        if (l.n < 0 || l.n >= xv.n || l.y < 0 || l.y >= xv.h || l.x < 0 || l.x >= xv.w)
            throw DataError("gather_locations: position out of range");
        for (int ch = 0; ch < xv.c; ++ch) out.at(int(p), ch, 0, 0) = xv.at(l.n, ch, l.y, l.x);
    }
    return g.make(std::move(out), x->needs_grad, [x, locs = std::move(locs)](Node<S>& self) {
        x->ensure_grad();
        for (size_t p = 0; p < locs.size(); ++p) {
            const auto& l = locs[p];
            for (int ch = 0; ch < self.value.c; ++ch)
                x->grad.at(l.n, ch, l.y, l.x) += self.grad.at(int(p), ch, 0, 0);
        }
    });
}

// Rescales each row of a (P,k,1,1) batch of vectors to unit Euclidean norm.
template <typename S>
inline Node<S>* l2_normalize_rows(Graph<S>& g, Node<S>* x) {
    const Tensor<S>& xv = x->value;
    Tensor<S> out(xv.n, xv.c, xv.h, xv.w);
    const int k = xv.c * xv.h * xv.w;
    auto norms = std::make_shared<std::vector<S>>(size_t(xv.n));
    for (int in = 0; in < xv.n; ++in) {
        const S* p = &xv.data[size_t(in) * k];
        S acc = 0;
        for (int i = 0; i < k; ++i) acc += p[i] * p[i];
        const S r = std::max(std::sqrt(acc), S(1e-12));
        (*norms)[in] = r;
        S* po = &out.data[size_t(in) * k];
        for (int i = 0; i < k; ++i) po[i] = p[i] / r;
    }
    return g.make(std::move(out), x->needs_grad, [x, k, norms](Node<S>& self) {
        x->ensure_grad();
        for (int in = 0; in < self.value.n; ++in) {
            const S r = (*norms)[in];
            const S* y = &self.value.data[size_t(in) * k];
            const S* gy = &self.grad.data[size_t(in) * k];
            S* gx = &x->grad.data[size_t(in) * k];
            S dot = 0;
            for (int i = 0; i < k; ++i) dot += y[i] * gy[i];
            for (int i = 0; i < k; ++i) gx[i] += (gy[i] - y[i] * dot) / r;
        }
    });
}

// Noise-contrastive loss with one positive per query and a shared negative
// bank: q, kp are (P,k,1,1); neg is (M,k,1,1). All similarities are plain dot
// products scaled by 1/tau.
template <typename S>
inline Node<S>* info_nce(Graph<S>& g, Node<S>* q, Node<S>* kp, Node<S>* neg, S tau) {
    const int P = q->value.n;
    const int k = q->value.c * q->value.h * q->value.w;
    const int M = neg->value.n;
    if (!q->value.same_shape(kp->value) || neg->value.c * neg->value.h * neg->value.w != k)
        throw DataError("info_nce: shape mismatch");
    if (tau <= S(0)) throw DataError("info_nce: tau must be positive");

    // soft[p] = softmax over (positive, M negatives) for query p
    auto soft = std::make_shared<std::vector<S>>(size_t(P) * (M + 1));
    S loss = 0;
    for (int p = 0; p < P; ++p) {
        const S* qp = &q->value.data[size_t(p) * k];
        std::vector<S> s(M + 1);
        const S* kpp = &kp->value.data[size_t(p) * k];
        S sp = 0;
        for (int i = 0; i < k; ++i) sp += qp[i] * kpp[i];
        s[0] = sp / tau;
        for (int mneg = 0; mneg < M; ++mneg) {
            const S* np = &neg->value.data[size_t(mneg) * k];
            S sn = 0;
            for (int i = 0; i < k; ++i) sn += qp[i] * np[i];
            s[mneg + 1] = sn / tau;
        }
        const S mx = *std::max_element(s.begin(), s.end());
        S denom = 0;
        for (S v : s) denom += std::exp(v - mx);
        for (int j = 0; j <= M; ++j)
            (*soft)[size_t(p) * (M + 1) + j] = std::exp(s[j] - mx) / denom;
        loss += -(s[0] - mx - std::log(denom));
    }
    loss /= S(P);
    Tensor<S> out(1, 1, 1, 1, loss);
    const bool needs = q->needs_grad || kp->needs_grad || neg->needs_grad;
    return g.make(std::move(out), needs, [q, kp, neg, tau, soft, P, M, k](Node<S>& self) {
        const S go = self.grad.data[0] / (S(P) * tau);
        if (q->needs_grad) q->ensure_grad();
        if (kp->needs_grad) kp->ensure_grad();
        if (neg->needs_grad) neg->ensure_grad();
        for (int p = 0; p < P; ++p) {
            const S* qp = &q->value.data[size_t(p) * k];
            const S* kpp = &kp->value.data[size_t(p) * k];
            const S cpos = ((*soft)[size_t(p) * (M + 1)] - S(1)) * go;
            if (q->needs_grad) {
                S* gq = &q->grad.data[size_t(p) * k];
                for (int i = 0; i < k; ++i) gq[i] += cpos * kpp[i];
                for (int mneg = 0; mneg < M; ++mneg) {
                    const S cn = (*soft)[size_t(p) * (M + 1) + mneg + 1] * go;
                    const S* np = &neg->value.data[size_t(mneg) * k];
                    for (int i = 0; i < k; ++i) gq[i] += cn * np[i];
                }
            }
            if (kp->needs_grad) {
                S* gk = &kp->grad.data[size_t(p) * k];
                for (int i = 0; i < k; ++i) gk[i] += cpos * qp[i];
            }
            if (neg->needs_grad) {
                for (int mneg = 0; mneg < M; ++mneg) {
                    const S cn = (*soft)[size_t(p) * (M + 1) + mneg + 1] * go;
                    S* gn = &neg->grad.data[size_t(mneg) * k];
                    for (int i = 0; i < k; ++i) gn[i] += cn * qp[i];
                }
            }
        }
    });
}

// Weighted sum of scalar nodes; weights are plain constants.
template <typename S>
inline Node<S>* weighted_sum(Graph<S>& g, const std::vector<std::pair<Node<S>*, S>>& terms) {
    if (terms.empty()) throw DataError("weighted_sum: no terms");
    S acc = 0;
    bool needs = false;
    for (const auto& [node, w] : terms) {
        if (node->value.size() != 1) throw DataError("weighted_sum: non-scalar term");
        acc += w * node->value.data[0];
        needs = needs || node->needs_grad;
    }
    Tensor<S> out(1, 1, 1, 1, acc);
    return g.make(std::move(out), needs, [terms](Node<S>& self) {
        for (const auto& [node, w] : terms) {
            if (!node->needs_grad) continue;
            node->ensure_grad();
            node->grad.data[0] += w * self.grad.data[0];
        }
    });
}

} // namespace ops

} // namespace arit::nn
