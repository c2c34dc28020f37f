#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "arit/common/rng.hpp"
#include "arit/nn/graph.hpp"

namespace arit::nn {

// Convolution layer owning its weight/bias. Weights start N(0,1)/sqrt(fan_in)
// drawn from the provided stream; biases start at zero.
template <typename S>
struct ConvLayer {
    Param<S> w, b;
    int k = 3, stride = 1, pad = 1;
    bool use_bias = true;

    ConvLayer() = default;
    ConvLayer(const std::string& name, int in_c, int out_c, int k_, int stride_, int pad_,
              Rng& rng, bool zero_init = false, bool use_bias_ = true)
        : w(name + ".w", {out_c, in_c * k_ * k_}),
          b(name + ".b", {out_c}),
          k(k_), stride(stride_), pad(pad_), use_bias(use_bias_) {
        const double scale = 1.0 / std::sqrt(double(in_c) * k_ * k_);
        for (auto& v : w.value) v = zero_init ? S(0) : S(rng.normal() * scale);
    }

    Node<S>* apply(Graph<S>& g, Node<S>* x) {
        return ops::conv2d(g, x, w, use_bias ? &b : nullptr, k, stride, pad);
    }

    void collect(std::vector<Param<S>*>& out) {
        out.push_back(&w);
        if (use_bias) out.push_back(&b);
    }
};

// conv-norm-relu-conv(zero-init)-norm with identity skip: exact identity at
// initialization because the zero second conv keeps the residual branch at 0.
template <typename S>
struct ResBlock {
    ConvLayer<S> c1, c2;

    ResBlock() = default;
    ResBlock(const std::string& name, int ch, Rng& rng)
        : c1(name + ".c1", ch, ch, 3, 1, 1, rng),
          c2(name + ".c2", ch, ch, 3, 1, 1, rng, /*zero_init=*/true) {}

    Node<S>* apply(Graph<S>& g, Node<S>* x) {
        Node<S>* h = ops::relu(g, ops::instance_norm(g, c1.apply(g, x)));
        h = ops::instance_norm(g, c2.apply(g, h));
        return ops::add(g, x, h);
    }

    void collect(std::vector<Param<S>*>& out) {
        c1.collect(out);
        c2.collect(out);
    }
};

// Adam with decoupled parameter groups; moments are exposed so training
// checkpoints can serialize them next to the weights.
template <typename S>
class Adam {
public:
    Adam() = default;
    Adam(std::vector<Param<S>*> params, double lr, double beta1 = 0.5, double beta2 = 0.999,
         double eps = 1e-8)
        : params_(std::move(params)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
        m_.resize(params_.size());
        v_.resize(params_.size());
        for (size_t i = 0; i < params_.size(); ++i) {
            m_[i].assign(params_[i]->count(), S(0));
            v_[i].assign(params_[i]->count(), S(0));
        }
    }

    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(b1_, double(t_));
        const double bc2 = 1.0 - std::pow(b2_, double(t_));
        for (size_t i = 0; i < params_.size(); ++i) {
            Param<S>& p = *params_[i];
            for (size_t j = 0; j < p.count(); ++j) {
                const double gr = double(p.grad[j]);
                m_[i][j] = S(b1_ * double(m_[i][j]) + (1.0 - b1_) * gr);
                v_[i][j] = S(b2_ * double(v_[i][j]) + (1.0 - b2_) * gr * gr);
                const double mhat = double(m_[i][j]) / bc1;
                const double vhat = double(v_[i][j]) / bc2;
                p.value[j] -= S(lr_ * mhat / (std::sqrt(vhat) + eps_));
            }
        }
    }

    void zero_grad() {
        for (Param<S>* p : params_) p->zero_grad();
    }

    const std::vector<Param<S>*>& params() const { return params_; }
    std::vector<std::vector<S>>& moments_m() { return m_; }
    std::vector<std::vector<S>>& moments_v() { return v_; }
    long long& timestep() { return t_; }

private:
    std::vector<Param<S>*> params_;
    double lr_ = 2e-4, b1_ = 0.5, b2_ = 0.999, eps_ = 1e-8;
    std::vector<std::vector<S>> m_, v_;
    long long t_ = 0;
};

} // namespace arit::nn
