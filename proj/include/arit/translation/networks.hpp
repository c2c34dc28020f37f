#pragma once

#include <memory>
#include <string>
#include <vector>

#include "arit/imagecore/image.hpp"
#include "arit/nn/layers.hpp"

namespace arit::translation {

using img::ImageTensor;
using nn::Graph;
using nn::Node;
using nn::Param;
using nn::Tensor;
namespace ops = nn::ops;

// ---- tensor <-> image plumbing ---------------------------------------------

template <typename S>
Tensor<S> batch_to_nchw(const std::vector<const ImageTensor*>& images) {
    if (images.empty()) throw DataError("batch_to_nchw: empty batch");
    const ImageTensor& f = *images[0];
    Tensor<S> t(int(images.size()), f.channels, f.height, f.width);
    for (size_t b = 0; b < images.size(); ++b) {
        const ImageTensor& im = *images[b];
        if (im.height != f.height || im.width != f.width || im.channels != f.channels)
            throw DataError("batch_to_nchw: mixed shapes in batch");
        for (int ch = 0; ch < f.channels; ++ch)
            for (int y = 0; y < f.height; ++y)
                for (int x = 0; x < f.width; ++x)
                    t.at(int(b), ch, y, x) = S(im.at(y, x, ch));
    }
    return t;
}

template <typename S>
Tensor<S> to_nchw(const ImageTensor& image) {
    return batch_to_nchw<S>({&image});
}

template <typename S>
ImageTensor nchw_to_image(const Tensor<S>& t, int index) {
    if (index < 0 || index >= t.n) throw DataError("nchw_to_image: index out of range");
    ImageTensor im(t.h, t.w, t.c);
    for (int ch = 0; ch < t.c; ++ch)
        for (int y = 0; y < t.h; ++y)
            for (int x = 0; x < t.w; ++x) im.at(y, x, ch) = float(t.at(index, ch, y, x));
    return im;
}

// ---- network specs -----------------------------------------------------------

struct GeneratorSpec {
    int in_channels = 3;
    int out_channels = 3;
    int base_channels = 32;
    int n_downsamples = 2;
    int n_residual_blocks = 4;
    bool instance_norm = true;
};

struct DiscriminatorSpec {
    int in_channels = 3;
    int base_channels = 32;
    int n_layers = 3;
};

struct HeadSpec {
    int k_proj = 64;
    int hidden = 64;
};

// ---- generator ---------------------------------------------------------------

// Encoder-decoder with a residual trunk. Takes images in [0,1], remaps to
// [-1,1] internally, and squashes back to [0,1] through tanh at the output.
// The feature map after the residual trunk is the designated encoder output
// used for patch-contrastive features. Channel widths double per downsample,
// capped at twice the base width to keep single-core training tractable.
template <typename S>
class Generator {
public:
    Generator() = default;
    Generator(const std::string& name, const GeneratorSpec& spec, Rng& rng) : spec_(spec) {
        if (spec.base_channels < 1 || spec.n_downsamples < 1 || spec.n_residual_blocks < 0)
            throw ConfigError("Generator: bad spec");
        int ch = spec.base_channels;
        stem_ = nn::ConvLayer<S>(name + ".stem", spec.in_channels, ch, 3, 1, 1, rng);
        for (int i = 0; i < spec.n_downsamples; ++i) {
            const int next = std::min(ch * 2, spec.base_channels * 2);
            downs_.emplace_back(name + ".down" + std::to_string(i), ch, next, 3, 2, 1, rng);
            ch = next;
        }
        feature_channels_ = ch;
        for (int i = 0; i < spec.n_residual_blocks; ++i)
            res_.emplace_back(name + ".res" + std::to_string(i), ch, rng);
        for (int i = 0; i < spec.n_downsamples; ++i) {
            const int next = i + 1 < spec.n_downsamples ? ch : spec.base_channels;
            ups_.emplace_back(name + ".up" + std::to_string(i), ch, next, 3, 1, 1, rng);
            ch = next;
        }
        head_ = nn::ConvLayer<S>(name + ".head", ch, spec.out_channels, 3, 1, 1, rng);
    }

    struct Out {
        Node<S>* image;   // [0,1], same resolution as the input
        Node<S>* feature; // encoder output (after the residual trunk)
    };

    Node<S>* encode(Graph<S>& g, Node<S>* x01) {
        check_input(x01->value);
        Node<S>* h = ops::affine(g, x01, S(2), S(-1));
        h = act(g, norm(g, stem_.apply(g, h)));
        for (auto& d : downs_) h = act(g, norm(g, d.apply(g, h)));
        for (auto& r : res_) h = r.apply(g, h);
        return h;
    }

    Out apply(Graph<S>& g, Node<S>* x01) {
        Node<S>* f = encode(g, x01);
        Node<S>* h = f;
        for (auto& u : ups_) h = act(g, norm(g, u.apply(g, ops::upsample2(g, h))));
        h = ops::tanh_op(g, head_.apply(g, h));
        Node<S>* img = ops::affine(g, h, S(0.5), S(0.5));
        return {img, f};
    }

    // Decoder-only pass from an encoder feature node.
    Node<S>* decode(Graph<S>& g, Node<S>* f) {
        Node<S>* h = f;
        for (auto& u : ups_) h = act(g, norm(g, u.apply(g, ops::upsample2(g, h))));
        h = ops::tanh_op(g, head_.apply(g, h));
        return ops::affine(g, h, S(0.5), S(0.5));
    }

    // Single-image inference convenience (no gradients kept afterwards).
    ImageTensor run(const ImageTensor& image) {
        Graph<S> g;
        Node<S>* x = g.constant(to_nchw<S>(image));
        Out out = apply(g, x);
        ImageTensor result = nchw_to_image(out.image->value, 0);
        result.clip01();
        return result;
    }

    void collect(std::vector<Param<S>*>& out) {
        stem_.collect(out);
        for (auto& d : downs_) d.collect(out);
        for (auto& r : res_) r.collect(out);
        for (auto& u : ups_) u.collect(out);
        head_.collect(out);
    }

    const GeneratorSpec& spec() const { return spec_; }
    int feature_channels() const { return feature_channels_; }

private:
    void check_input(const Tensor<S>& x) const {
        const int div = 1 << spec_.n_downsamples;
        if (x.h % div != 0 || x.w % div != 0)
            throw DataError("Generator: resolution not divisible by 2^n_downsamples");
        if (x.c != spec_.in_channels) throw DataError("Generator: channel mismatch");
    }
    Node<S>* norm(Graph<S>& g, Node<S>* x) {
        return spec_.instance_norm ? ops::instance_norm(g, x) : x;
    }
    Node<S>* act(Graph<S>& g, Node<S>* x) { return ops::relu(g, x); }

    GeneratorSpec spec_;
    int feature_channels_ = 0;
    nn::ConvLayer<S> stem_;
    std::vector<nn::ConvLayer<S>> downs_;
    std::vector<nn::ResBlock<S>> res_;
    std::vector<nn::ConvLayer<S>> ups_;
    nn::ConvLayer<S> head_;
};

// ---- patch discriminator -----------------------------------------------------

// Strided conv stack emitting a spatial grid of per-patch scores squashed to
// (0,1) by a final sigmoid.
template <typename S>
class Discriminator {
public:
    Discriminator() = default;
    Discriminator(const std::string& name, const DiscriminatorSpec& spec, Rng& rng)
        : spec_(spec) {
        if (spec.base_channels < 1 || spec.n_layers < 1)
            throw ConfigError("Discriminator: bad spec");
        int ch = spec.in_channels;
        for (int i = 0; i < spec.n_layers; ++i) {
            const int next = std::min(spec.base_channels << i, spec.base_channels * 4);
            const int stride = i + 1 < spec.n_layers ? 2 : 1;
            layers_.emplace_back(name + ".l" + std::to_string(i), ch, next, 4, stride, 1, rng);
            ch = next;
        }
        head_ = nn::ConvLayer<S>(name + ".score", ch, 1, 4, 1, 1, rng);
    }

    Node<S>* apply(Graph<S>& g, Node<S>* x01) {
        Node<S>* h = ops::affine(g, x01, S(2), S(-1));
        for (size_t i = 0; i < layers_.size(); ++i) {
            h = layers_[i].apply(g, h);
            if (i > 0) h = ops::instance_norm(g, h);
            h = ops::leaky_relu(g, h, S(0.2));
        }
        return ops::sigmoid_op(g, head_.apply(g, h));
    }

    void collect(std::vector<Param<S>*>& out) {
        for (auto& l : layers_) l.collect(out);
        head_.collect(out);
    }

    const DiscriminatorSpec& spec() const { return spec_; }

private:
    DiscriminatorSpec spec_;
    std::vector<nn::ConvLayer<S>> layers_;
    nn::ConvLayer<S> head_;
};

// ---- projection head ----------------------------------------------------------

// Two-layer per-location MLP (1x1 convs) followed by L2 normalization. Apply
// to location-batched tensors of shape (P, C, 1, 1).
template <typename S>
class ProjectionHead {
public:
    ProjectionHead() = default;
    ProjectionHead(const std::string& name, int in_channels, const HeadSpec& spec, Rng& rng)
        : c1_(name + ".fc1", in_channels, spec.hidden, 1, 1, 0, rng),
          c2_(name + ".fc2", spec.hidden, spec.k_proj, 1, 1, 0, rng),
          spec_(spec) {}

    Node<S>* apply(Graph<S>& g, Node<S>* x) {
        Node<S>* h = ops::relu(g, c1_.apply(g, x));
        h = c2_.apply(g, h);
        return ops::l2_normalize_rows(g, h);
    }

    void collect(std::vector<Param<S>*>& out) {
        c1_.collect(out);
        c2_.collect(out);
    }

    const HeadSpec& spec() const { return spec_; }

private:
    nn::ConvLayer<S> c1_, c2_;
    HeadSpec spec_;
};

// ---- model bundle --------------------------------------------------------------

// All networks of one translation model. Two-stage mode holds two
// generator/discriminator pairs plus the projection heads; single-stage mode
// (decoupling off) holds exactly one pair mapping noisy <-> virtual directly
// and never instantiates the second stage or the heads.
template <typename S>
struct ModelBundle {
    GeneratorSpec gen_spec;
    DiscriminatorSpec disc_spec;
    HeadSpec head_spec;
    bool two_stage = true;
    bool with_heads = true;

    std::unique_ptr<Generator<S>> gen_noisy_to_clean; // single-stage: noisy -> virtual
    std::unique_ptr<Generator<S>> gen_clean_to_noisy; // single-stage: virtual -> noisy
    std::unique_ptr<Generator<S>> gen_clean_to_virtual;
    std::unique_ptr<Generator<S>> gen_virtual_to_clean;
    std::unique_ptr<Discriminator<S>> disc_clean_local;  // judges first-stage outputs
    std::unique_ptr<Discriminator<S>> disc_noisy;        // judges noisy-domain outputs
    std::unique_ptr<Discriminator<S>> disc_virtual;      // judges virtual-domain outputs
    std::unique_ptr<Discriminator<S>> disc_clean_global; // judges second-stage backward outputs
    std::unique_ptr<ProjectionHead<S>> proj_query;       // noisy-feature projection
    std::unique_ptr<ProjectionHead<S>> proj_positive;    // virtual-feature projection

    ModelBundle() = default;
    ModelBundle(const GeneratorSpec& gs, const DiscriminatorSpec& ds, const HeadSpec& hs,
                bool two_stage_, bool with_heads_, uint64_t seed)
        : gen_spec(gs), disc_spec(ds), head_spec(hs), two_stage(two_stage_),
          with_heads(with_heads_) {
        // Every network draws from its own seed stream so the presence of the
        // optional second stage never shifts another network's initialization.
        auto stream = [seed](uint64_t idx) { return Rng(hash64({seed, idx})); };
        Rng r0 = stream(0);
        gen_noisy_to_clean = std::make_unique<Generator<S>>("g_n2c", gs, r0);
        Rng r1 = stream(1);
        gen_clean_to_noisy = std::make_unique<Generator<S>>("g_c2n", gs, r1);
        Rng r4 = stream(4);
        disc_clean_local = std::make_unique<Discriminator<S>>("d_c1", ds, r4);
        Rng r5 = stream(5);
        disc_noisy = std::make_unique<Discriminator<S>>("d_n", ds, r5);
        if (two_stage) {
            Rng r2 = stream(2);
            gen_clean_to_virtual = std::make_unique<Generator<S>>("g_c2v", gs, r2);
            Rng r3 = stream(3);
            gen_virtual_to_clean = std::make_unique<Generator<S>>("g_v2c", gs, r3);
            Rng r6 = stream(6);
            disc_virtual = std::make_unique<Discriminator<S>>("d_v", ds, r6);
            Rng r7 = stream(7);
            disc_clean_global = std::make_unique<Discriminator<S>>("d_c2", ds, r7);
        }
        if (with_heads) {
            const int fc = gen_noisy_to_clean->feature_channels();
            Rng r8 = stream(8);
            proj_query = std::make_unique<ProjectionHead<S>>("p_n", fc, hs, r8);
            Rng r9 = stream(9);
            proj_positive = std::make_unique<ProjectionHead<S>>("p_v", fc, hs, r9);
        }
    }

    int generator_count() const {
        int n = 0;
        for (auto* p : {gen_noisy_to_clean.get(), gen_clean_to_noisy.get(),
                        gen_clean_to_virtual.get(), gen_virtual_to_clean.get()})
            n += p != nullptr;
        return n;
    }

    void collect_generator_params(std::vector<Param<S>*>& out) {
        gen_noisy_to_clean->collect(out);
        gen_clean_to_noisy->collect(out);
        if (two_stage) {
            gen_clean_to_virtual->collect(out);
            gen_virtual_to_clean->collect(out);
        }
        if (with_heads) {
            proj_query->collect(out);
            proj_positive->collect(out);
        }
    }

    void collect_discriminator_params(std::vector<Param<S>*>& out) {
        disc_clean_local->collect(out);
        disc_noisy->collect(out);
        if (two_stage) {
            disc_virtual->collect(out);
            disc_clean_global->collect(out);
        }
    }

    void collect_all(std::vector<Param<S>*>& out) {
        collect_generator_params(out);
        collect_discriminator_params(out);
    }
};

} // namespace arit::translation
