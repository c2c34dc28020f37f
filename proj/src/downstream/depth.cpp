#include "arit/downstream/depth.hpp"

#include <cmath>
#include <numeric>

#include "arit/common/rng.hpp"
#include "arit/metrics/metrics.hpp"

namespace arit::downstream {

namespace {

constexpr float kLogFloor = 1e-6f;

nn::Tensor<float> batch_images(const std::vector<DepthSample>& samples,
                               const std::vector<size_t>& idx) {
    const img::ImageTensor& first = samples[idx[0]].first;
    nn::Tensor<float> t(int(idx.size()), first.channels, first.height, first.width);
    for (size_t b = 0; b < idx.size(); ++b) {
        const img::ImageTensor& im = samples[idx[b]].first;
        for (int y = 0; y < im.height; ++y)
            for (int x = 0; x < im.width; ++x)
                for (int ch = 0; ch < im.channels; ++ch)
                    t.at(int(b), ch, y, x) = im.at(y, x, ch);
    }
    return t;
}

nn::Tensor<float> batch_log_depths(const std::vector<DepthSample>& samples,
                                   const std::vector<size_t>& idx) {
    const img::FloatMap& first = samples[idx[0]].second;
    nn::Tensor<float> t(int(idx.size()), 1, first.height, first.width);
    for (size_t b = 0; b < idx.size(); ++b) {
        const img::FloatMap& d = samples[idx[b]].second;
        for (int y = 0; y < d.height; ++y)
            for (int x = 0; x < d.width; ++x)
                t.at(int(b), 0, y, x) = std::log(std::max(d.at(y, x), kLogFloor));
    }
    return t;
}

} // namespace

DepthNet::DepthNet(const DepthNetConfig& cfg) : cfg_(cfg) {
    if (cfg.base < 1) throw ConfigError("DepthNet: base width must be >= 1");
    Rng rng(cfg.seed);
    const int b = cfg.base;
    stem_ = nn::ConvLayer<float>("depth.stem", 3, b, 3, 1, 1, rng);
    down1_ = nn::ConvLayer<float>("depth.down1", b, 2 * b, 3, 2, 1, rng);
    down2_ = nn::ConvLayer<float>("depth.down2", 2 * b, 4 * b, 3, 2, 1, rng);
    up1_ = nn::ConvLayer<float>("depth.up1", 4 * b, 2 * b, 3, 1, 1, rng);
    up2_ = nn::ConvLayer<float>("depth.up2", 2 * b, b, 3, 1, 1, rng);
    head_ = nn::ConvLayer<float>("depth.head", b, 1, 3, 1, 1, rng);
}

nn::Node<float>* DepthNet::apply(nn::Graph<float>& g, nn::Node<float>* x) {
    if (x->value.h % 4 != 0 || x->value.w % 4 != 0)
        throw DataError("DepthNet: input resolution must be divisible by 4");
    using namespace nn::ops;
    nn::Node<float>* h = relu(g, instance_norm(g, stem_.apply(g, x)));
    h = relu(g, instance_norm(g, down1_.apply(g, h)));
    h = relu(g, instance_norm(g, down2_.apply(g, h)));
    h = relu(g, instance_norm(g, up1_.apply(g, upsample2(g, h))));
    h = relu(g, instance_norm(g, up2_.apply(g, upsample2(g, h))));
    return softplus_op(g, head_.apply(g, h));
}

std::vector<nn::Param<float>*> DepthNet::params() {
    std::vector<nn::Param<float>*> out;
    stem_.collect(out);
    down1_.collect(out);
    down2_.collect(out);
    up1_.collect(out);
    up2_.collect(out);
    head_.collect(out);
    return out;
}

img::FloatMap DepthNet::predict(const img::ImageTensor& image) {
    nn::Graph<float> g;
    nn::Tensor<float> t(1, image.channels, image.height, image.width);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            for (int ch = 0; ch < image.channels; ++ch) t.at(0, ch, y, x) = image.at(y, x, ch);
    const nn::Tensor<float>& out = apply(g, g.leaf(std::move(t)))->value;
    img::FloatMap depth(image.height, image.width);
    std::copy(out.data.begin(), out.data.end(), depth.data.begin());
    return depth;
}

DepthTrainResult train_depth_net(const std::vector<DepthSample>& samples,
                                 const DepthNetConfig& cfg) {
    if (samples.empty()) throw DataError("train_depth_net: no samples");
    const img::ImageTensor& first = samples.front().first;
    for (const DepthSample& s : samples) {
        if (!s.first.same_shape(first))
            throw DataError("train_depth_net: inconsistent image shapes");
        if (s.second.height != first.height || s.second.width != first.width)
            throw DataError("train_depth_net: depth/image shape mismatch");
        for (float d : s.second.data)
            if (!(d > 0.0f)) throw DataError("train_depth_net: depth must be positive");
    }

    DepthTrainResult result{DepthNet(cfg), {}, 0.0};
    const int batch = std::max(1, cfg.batch);

    auto epoch_batches = [&](uint64_t epoch_seed) {
        std::vector<size_t> order(samples.size());
        std::iota(order.begin(), order.end(), size_t(0));
        Rng rng(epoch_seed);
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[size_t(rng.next_u64() % i)]);
        std::vector<std::vector<size_t>> batches;
        for (size_t at = 0; at < order.size(); at += size_t(batch))
            batches.emplace_back(order.begin() + long(at),
                                 order.begin() + long(std::min(at + size_t(batch), order.size())));
        return batches;
    };

    auto batch_loss = [&](const std::vector<size_t>& idx, bool learn, nn::Adam<float>* opt) {
        nn::Graph<float> g;
        nn::Node<float>* pred = result.model.apply(g, g.leaf(batch_images(samples, idx)));
        nn::Node<float>* loss = nn::ops::l1_mean(
            g, nn::ops::log_clamped(g, pred, kLogFloor), g.constant(batch_log_depths(samples, idx)));
        const double value = loss->value.data[0];
        if (learn) {
            for (auto* p : result.model.params()) p->zero_grad();
            g.backward(loss);
            opt->step();
        }
        return value;
    };

    if (cfg.epochs <= 0) {
        double acc = 0.0;
        const auto batches = epoch_batches(hash64({cfg.seed, 0ULL}));
        for (const auto& idx : batches) acc += batch_loss(idx, false, nullptr);
        result.final_loss = acc / double(batches.size());
        return result;
    }

    nn::Adam<float> opt(result.model.params(), cfg.lr, 0.9, 0.999);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double acc = 0.0;
        const auto batches = epoch_batches(hash64({cfg.seed, uint64_t(epoch) + 1}));
        for (const auto& idx : batches) acc += batch_loss(idx, true, &opt);
        const double mean = acc / double(batches.size());
        if (!std::isfinite(mean))
            throw NumericError("train_depth_net: non-finite loss at epoch " +
                               std::to_string(epoch));
        result.epoch_loss.push_back(mean);
    }
    result.final_loss = result.epoch_loss.back();
    return result;
}

metrics::MetricReport eval_depth_pipeline(DepthNet& model,
                                          const std::vector<img::ImageTensor>& images,
                                          const std::vector<img::FloatMap>& gt_depths) {
    if (images.empty()) throw DataError("eval_depth_pipeline: no images");
    if (images.size() != gt_depths.size())
        throw DataError("eval_depth_pipeline: image/depth count mismatch");

    metrics::MetricReport report;
    auto& abs_rel = report.per_item["abs_rel"];
    auto& sq_rel = report.per_item["sq_rel"];
    auto& rmse = report.per_item["rmse"];
    for (size_t i = 0; i < images.size(); ++i) {
        const img::FloatMap pred = model.predict(images[i]);
        const metrics::DepthErrors e = metrics::depth_errors(pred, gt_depths[i]);
        abs_rel.push_back(e.abs_rel);
        sq_rel.push_back(e.sq_rel);
        rmse.push_back(e.rmse);
    }
    const auto mean = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
    };
    report.scalars["abs_rel"] = mean(abs_rel);
    report.scalars["sq_rel"] = mean(sq_rel);
    report.scalars["rmse"] = mean(rmse);
    report.scalars["n_items"] = double(images.size());
    return report;
}

} // namespace arit::downstream
