#pragma once

#include <array>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "arit/imagecore/image.hpp"
#include "arit/metrics/embedder.hpp"
#include "arit/nn/layers.hpp"

namespace arit::splat {

// HWC [0,1] image -> (1, c, h, w) double tensor for the feature stack.
nn::Tensor<double> to_chw(const img::ImageTensor& image);

// Layered feature maps tau_l for the perceptual losses. build() places the
// pyramid on a tape so callers can differentiate the losses w.r.t. the input
// image; layer ids are 1-based and returned in ascending order.
class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;
    virtual std::vector<int> layer_ids() const = 0;
    virtual int content_layer() const = 0;
    virtual std::vector<int> style_layers() const = 0;
    virtual std::vector<nn::Node<double>*> build(nn::Graph<double>& g, nn::Node<double>* image,
                                                 int upto_layer) const = 0;

    // Value-only feature maps of an image, layers 1..upto_layer.
    std::vector<nn::Tensor<double>> feature_maps(const img::ImageTensor& image,
                                                 int upto_layer) const;
};

// Default extractor: four 3x3 stride-2 convolutions with fixed seeded
// N(0,1)/sqrt(fan_in) weights, no bias, absolute-value nonlinearity. Content
// layer 3, style layers 1-3. Doubles as the production image embedder:
// embed() is the global average pool of stage 4 (d = 192).
class SeededConvExtractor final : public FeatureExtractor, public metrics::Embedder {
public:
    explicit SeededConvExtractor(uint64_t seed = 0);

    std::vector<int> layer_ids() const override { return {1, 2, 3, 4}; }
    int content_layer() const override { return 3; }
    std::vector<int> style_layers() const override { return {1, 2, 3}; }
    std::vector<nn::Node<double>*> build(nn::Graph<double>& g, nn::Node<double>* image,
                                         int upto_layer) const override;

    int dim() const override { return 192; }
    Eigen::VectorXd embed(const img::ImageTensor& image) const override;

private:
    mutable std::array<nn::ConvLayer<double>, 4> convs_;
};

// Per-channel spatial mean and standard deviation of one (1, c, h, w) map:
// the statistics compared by style_loss, exposed for invariance tests.
std::pair<Eigen::VectorXd, Eigen::VectorXd> style_statistics(const nn::Tensor<double>& map);

// || tau(generated) - tau(target) ||_2 over the content layer.
double content_loss(const img::ImageTensor& generated, const img::ImageTensor& target,
                    const FeatureExtractor& fx);

// sum_l ||mu_l(generated) - mu_l(reference)||_2 + ||sigma_l(...)||_2 over the
// style layers.
double style_loss(const img::ImageTensor& generated, const img::ImageTensor& reference,
                  const FeatureExtractor& fx);

} // namespace arit::splat
