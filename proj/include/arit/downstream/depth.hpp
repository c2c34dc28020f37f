#pragma once

#include <utility>
#include <vector>

#include "arit/imagecore/image.hpp"
#include "arit/metrics/report.hpp"
#include "arit/nn/layers.hpp"

namespace arit::downstream {

struct DepthNetConfig {
    int epochs = 20;
    int batch = 4;
    double lr = 1e-3;
    uint64_t seed = 0;
    int base = 16; // stem width; the decoder mirrors the encoder
};

// Small convolutional encoder-decoder emitting a strictly positive depth map
// (softplus head). Supervised with mean |log pred - log gt|, which makes the
// loss scale-robust across the depth range.
class DepthNet {
public:
    explicit DepthNet(const DepthNetConfig& cfg);

    img::FloatMap predict(const img::ImageTensor& image);

    // Forward pass on the tape; exposed for the training loop.
    nn::Node<float>* apply(nn::Graph<float>& g, nn::Node<float>* x);
    std::vector<nn::Param<float>*> params();

    const DepthNetConfig& config() const { return cfg_; }

private:
    DepthNetConfig cfg_;
    nn::ConvLayer<float> stem_, down1_, down2_, up1_, up2_, head_;
};

using DepthSample = std::pair<img::ImageTensor, img::FloatMap>;

struct DepthTrainResult {
    DepthNet model;
    std::vector<double> epoch_loss; // mean batch loss per epoch
    double final_loss = 0.0;        // last epoch, or the initial loss when epochs = 0
};

// Deterministic given cfg.seed. Throws NumericError when the loss turns
// non-finite.
DepthTrainResult train_depth_net(const std::vector<DepthSample>& samples,
                                 const DepthNetConfig& cfg);

// Depth-through-translation evaluation: per-image (abs_rel, sq_rel, rmse)
// arrays plus their unweighted means.
metrics::MetricReport eval_depth_pipeline(DepthNet& model,
                                          const std::vector<img::ImageTensor>& images,
                                          const std::vector<img::FloatMap>& gt_depths);

} // namespace arit::downstream
