#include "arit/splatting/perceptual.hpp"

#include <cmath>

#include "arit/common/error.hpp"

namespace arit::splat {

nn::Tensor<double> to_chw(const img::ImageTensor& image) {
    nn::Tensor<double> t(1, image.channels, image.height, image.width);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            for (int ch = 0; ch < image.channels; ++ch)
                t.at(0, ch, y, x) = image.at(y, x, ch);
    return t;
}

std::vector<nn::Tensor<double>> FeatureExtractor::feature_maps(const img::ImageTensor& image,
                                                               int upto_layer) const {
    nn::Graph<double> g;
    auto nodes = build(g, g.leaf(to_chw(image)), upto_layer);
    std::vector<nn::Tensor<double>> maps;
    maps.reserve(nodes.size());
    for (auto* n : nodes) maps.push_back(n->value);
    return maps;
}

SeededConvExtractor::SeededConvExtractor(uint64_t seed) {
    Rng rng(seed);
    const int widths[5] = {3, 24, 48, 96, 192};
    for (int i = 0; i < 4; ++i)
        convs_[size_t(i)] = nn::ConvLayer<double>("fx.s" + std::to_string(i + 1), widths[i],
                                                  widths[i + 1], 3, 2, 1, rng,
                                                  /*zero_init=*/false, /*use_bias=*/false);
}

std::vector<nn::Node<double>*> SeededConvExtractor::build(nn::Graph<double>& g,
                                                          nn::Node<double>* image,
                                                          int upto_layer) const {
    if (upto_layer < 1 || upto_layer > 4)
        throw DataError("feature extractor: layer must be in [1,4]");
    if (image->value.c != 3) throw DataError("feature extractor: expects a 3-channel image");
    std::vector<nn::Node<double>*> out;
    nn::Node<double>* h = image;
    for (int i = 0; i < upto_layer; ++i) {
        h = nn::ops::abs_op(g, convs_[size_t(i)].apply(g, h));
        out.push_back(h);
    }
    return out;
}

Eigen::VectorXd SeededConvExtractor::embed(const img::ImageTensor& image) const {
    nn::Graph<double> g;
    const nn::Tensor<double>& top = build(g, g.leaf(to_chw(image)), 4).back()->value;
    const int m = top.h * top.w;
    Eigen::VectorXd v(top.c);
    for (int ch = 0; ch < top.c; ++ch) {
        double acc = 0.0;
        const double* p = &top.data[size_t(ch) * m];
        for (int i = 0; i < m; ++i) acc += p[i];
        v[ch] = acc / m;
    }
    return v;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> style_statistics(const nn::Tensor<double>& map) {
    if (map.n != 1) throw DataError("style_statistics: expects a single map");
    const int m = map.h * map.w;
    Eigen::VectorXd mu(map.c), sd(map.c);
    for (int ch = 0; ch < map.c; ++ch) {
        const double* p = &map.data[size_t(ch) * m];
        double acc = 0.0;
        for (int i = 0; i < m; ++i) acc += p[i];
        const double mean = acc / m;
        double var = 0.0;
        for (int i = 0; i < m; ++i) var += (p[i] - mean) * (p[i] - mean);
        mu[ch] = mean;
        sd[ch] = std::sqrt(var / m);
    }
    return {mu, sd};
}

double content_loss(const img::ImageTensor& generated, const img::ImageTensor& target,
                    const FeatureExtractor& fx) {
    if (!generated.same_shape(target)) throw DataError("content_loss: resolution mismatch");
    const int layer = fx.content_layer();
    const nn::Tensor<double> a = fx.feature_maps(generated, layer).back();
    const nn::Tensor<double> b = fx.feature_maps(target, layer).back();
    double acc = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

double style_loss(const img::ImageTensor& generated, const img::ImageTensor& reference,
                  const FeatureExtractor& fx) {
    if (!generated.same_shape(reference)) throw DataError("style_loss: resolution mismatch");
    const std::vector<int> layers = fx.style_layers();
    int top = 0;
    for (int l : layers) top = std::max(top, l);
    const auto maps_a = fx.feature_maps(generated, top);
    const auto maps_b = fx.feature_maps(reference, top);
    double acc = 0.0;
    for (int l : layers) {
        const auto [mu_a, sd_a] = style_statistics(maps_a[size_t(l - 1)]);
        const auto [mu_b, sd_b] = style_statistics(maps_b[size_t(l - 1)]);
        acc += (mu_a - mu_b).norm() + (sd_a - sd_b).norm();
    }
    return acc;
}

} // namespace arit::splat
