#include "arit/splatting/pseudo.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "arit/common/threading.hpp"
#include "arit/imagecore/image_io.hpp"

namespace arit::splat {

namespace {

namespace fs = std::filesystem;

// Supervision targets are constant across descent steps, so they are
// extracted once per frame and replayed as tape constants.
struct FrameTargets {
    nn::Tensor<double> content_map;
    std::vector<nn::Tensor<double>> style_mu, style_sd; // (1,c,1,1) per style layer
};

nn::Tensor<double> as_row(const Eigen::VectorXd& v) {
    nn::Tensor<double> t(1, int(v.size()), 1, 1);
    for (int i = 0; i < v.size(); ++i) t.data[size_t(i)] = v[i];
    return t;
}

FrameTargets make_targets(const img::ImageTensor& virtual_image, const img::ImageTensor* ref,
                          const FeatureExtractor& fx) {
    FrameTargets t;
    t.content_map = fx.feature_maps(virtual_image, fx.content_layer()).back();
    if (ref) {
        int top = 0;
        for (int l : fx.style_layers()) top = std::max(top, l);
        const auto maps = fx.feature_maps(*ref, top);
        for (int l : fx.style_layers()) {
            const auto [mu, sd] = style_statistics(maps[size_t(l - 1)]);
            t.style_mu.push_back(as_row(mu));
            t.style_sd.push_back(as_row(sd));
        }
    }
    return t;
}

// Loss for one supervision frame; when grad_out is set, also folds the
// image gradient through the compositing weights into per-gaussian color
// gradients (dC/dc_i = w_i per pixel and channel).
double frame_loss(const GaussianCloud& cloud, const img::CameraPose& pose,
                  const FrameTargets& targets, const FeatureExtractor& fx,
                  const RenderConfig& cfg, double style_weight, Eigen::MatrixXd* grad_out) {
    const RenderResult rr = render(cloud, pose, cfg, grad_out != nullptr);
    const int k = cloud.color_dim();

    nn::Graph<double> g;
    nn::Tensor<double> image(1, k, cfg.height, cfg.width);
    for (int y = 0; y < cfg.height; ++y)
        for (int x = 0; x < cfg.width; ++x)
            for (int ch = 0; ch < k; ++ch)
                image.at(0, ch, y, x) = rr.values[(size_t(y) * cfg.width + x) * k + ch];
    nn::Node<double>* leaf = g.leaf(std::move(image), /*needs_grad=*/true);

    int upto = fx.content_layer();
    const bool with_style = style_weight != 0.0;
    if (with_style)
        for (int l : fx.style_layers()) upto = std::max(upto, l);
    const auto maps = fx.build(g, leaf, upto);

    using namespace nn::ops;
    nn::Node<double>* loss = l2_norm_all(
        g, sub(g, maps[size_t(fx.content_layer() - 1)], g.constant(targets.content_map)));
    if (with_style) {
        nn::Node<double>* style = nullptr;
        const std::vector<int> layers = fx.style_layers();
        for (size_t i = 0; i < layers.size(); ++i) {
            nn::Node<double>* map = maps[size_t(layers[i] - 1)];
            nn::Node<double>* term =
                add(g, l2_norm_all(g, sub(g, channel_mean(g, map), g.constant(targets.style_mu[i]))),
                    l2_norm_all(g, sub(g, channel_std(g, map), g.constant(targets.style_sd[i]))));
            style = style ? add(g, style, term) : term;
        }
        loss = add(g, loss, affine(g, style, style_weight, 0.0));
    }

    if (grad_out) {
        g.backward(loss);
        *grad_out = Eigen::MatrixXd::Zero(long(cloud.gaussians.size()), k);
        if (leaf->has_grad())
            for (int y = 0; y < cfg.height; ++y)
                for (int x = 0; x < cfg.width; ++x)
                    for (const auto& [idx, wgt] : rr.weights_at(y, x))
                        for (int ch = 0; ch < k; ++ch)
                            (*grad_out)(idx, ch) += wgt * leaf->grad.at(0, ch, y, x);
    }
    return loss->value.data[0];
}

void check_supervision(const GaussianCloud& cloud, const std::vector<FramePose>& virtual_frames,
                       const std::vector<img::ImageTensor>& real_refs, double style_weight) {
    cloud.validate();
    if (virtual_frames.empty()) throw DataError("supervision: no frames");
    if (style_weight != 0.0 && real_refs.size() != virtual_frames.size())
        throw DataError("supervision: need one style reference per frame");
}

std::pair<double, Eigen::MatrixXd> accumulate(const GaussianCloud& cloud,
                                              const std::vector<FramePose>& virtual_frames,
                                              const std::vector<FrameTargets>& targets,
                                              const FeatureExtractor& fx, const RenderConfig& cfg,
                                              double style_weight, bool with_grad) {
    const int n = int(virtual_frames.size());
    std::vector<double> losses(size_t(n), 0.0);
    std::vector<Eigen::MatrixXd> grads(static_cast<size_t>(n));
    parallel_for(n, [&](int i) {
        losses[size_t(i)] = frame_loss(cloud, virtual_frames[size_t(i)].second, targets[size_t(i)],
                                       fx, cfg, style_weight, with_grad ? &grads[size_t(i)] : nullptr);
    });
    double total = 0.0;
    Eigen::MatrixXd grad;
    if (with_grad) grad = Eigen::MatrixXd::Zero(long(cloud.gaussians.size()), cloud.color_dim());
    for (int i = 0; i < n; ++i) {
        total += losses[size_t(i)];
        if (with_grad) grad += grads[size_t(i)];
    }
    return {total, std::move(grad)};
}

std::vector<FrameTargets> all_targets(const std::vector<FramePose>& virtual_frames,
                                      const std::vector<img::ImageTensor>& real_refs,
                                      const FeatureExtractor& fx, double style_weight) {
    std::vector<FrameTargets> targets(virtual_frames.size());
    parallel_for(int(virtual_frames.size()), [&](int i) {
        targets[size_t(i)] =
            make_targets(virtual_frames[size_t(i)].first,
                         style_weight != 0.0 ? &real_refs[size_t(i)] : nullptr, fx);
    });
    return targets;
}

} // namespace

double supervision_loss(const GaussianCloud& cloud, const std::vector<FramePose>& virtual_frames,
                        const std::vector<img::ImageTensor>& real_refs,
                        const FeatureExtractor& fx, const RenderConfig& cfg,
                        double style_weight) {
    check_supervision(cloud, virtual_frames, real_refs, style_weight);
    const auto targets = all_targets(virtual_frames, real_refs, fx, style_weight);
    return accumulate(cloud, virtual_frames, targets, fx, cfg, style_weight, false)
        .first;
}

std::pair<double, Eigen::MatrixXd> color_gradient(const GaussianCloud& cloud,
                                                  const std::vector<FramePose>& virtual_frames,
                                                  const std::vector<img::ImageTensor>& real_refs,
                                                  const FeatureExtractor& fx,
                                                  const RenderConfig& cfg, double style_weight) {
    check_supervision(cloud, virtual_frames, real_refs, style_weight);
    const auto targets = all_targets(virtual_frames, real_refs, fx, style_weight);
    return accumulate(cloud, virtual_frames, targets, fx, cfg, style_weight, true);
}

GaussianCloud optimize_colors(GaussianCloud cloud, const std::vector<FramePose>& virtual_frames,
                              const std::vector<img::ImageTensor>& real_refs,
                              const FeatureExtractor& fx, const RenderConfig& cfg, int steps,
                              double step_size, double style_weight) {
    if (steps < 0) throw DataError("optimize_colors: steps must be >= 0");
    if (steps == 0) return cloud;
    check_supervision(cloud, virtual_frames, real_refs, style_weight);
    const auto targets = all_targets(virtual_frames, real_refs, fx, style_weight);

    for (int step = 0; step < steps; ++step) {
        auto [loss, grad] =
            accumulate(cloud, virtual_frames, targets, fx, cfg, style_weight, true);
        if (!std::isfinite(loss))
            throw NumericError("optimize_colors: non-finite loss at step " +
                               std::to_string(step));
        for (size_t i = 0; i < cloud.gaussians.size(); ++i) {
            Eigen::VectorXd& c = cloud.gaussians[i].c;
            c -= step_size * grad.row(long(i)).transpose();
            c = c.cwiseMax(0.0).cwiseMin(1.0);
        }
    }
    return cloud;
}

void generate_pseudo_labels(const std::string& dataset_root, const std::string& corrupted_dir,
                            const std::vector<int>& frame_ids, const PseudoConfig& cfg) {
    if (frame_ids.empty()) throw DataError("generate_pseudo_labels: no frames");
    if (cfg.window < 1 || cfg.init_stride < 1 || cfg.supervision_views < 1)
        throw DataError("generate_pseudo_labels: bad window/stride/views");

    const fs::path out_dir = fs::path(dataset_root) / "pseudo";
    fs::create_directories(out_dir);
    const SeededConvExtractor fx(cfg.extractor_seed);

    for (size_t begin = 0; begin < frame_ids.size(); begin += size_t(cfg.window)) {
        const size_t end = std::min(begin + size_t(cfg.window), frame_ids.size());
        std::vector<img::SceneSample> samples;
        std::vector<img::ImageTensor> refs;
        for (size_t i = begin; i < end; ++i) {
            samples.push_back(img::read_sample(dataset_root, frame_ids[i]));
            refs.push_back(img::read_png(
                (fs::path(corrupted_dir) / (img::frame_name(frame_ids[i]) + ".png")).string()));
        }
        const img::ImageTensor& first = samples.front().virtual_image;
        const RenderConfig rc = RenderConfig::for_image(first.width, first.height);
        GaussianCloud cloud = init_cloud_from_depth(samples, cfg.init_stride, rc);

        // Evenly spaced supervision views across the window.
        const int n = int(samples.size());
        const int views = std::min(cfg.supervision_views, n);
        std::vector<FramePose> sup_frames;
        std::vector<img::ImageTensor> sup_refs;
        int last = -1;
        for (int j = 0; j < views; ++j) {
            const int idx = views == 1 ? 0 : int(std::lround(double(j) * (n - 1) / (views - 1)));
            if (idx == last) continue;
            last = idx;
            sup_frames.emplace_back(samples[size_t(idx)].virtual_image, samples[size_t(idx)].pose);
            sup_refs.push_back(refs[size_t(idx)]);
        }

        cloud = optimize_colors(std::move(cloud), sup_frames, sup_refs, fx, rc, cfg.steps,
                                cfg.step_size, cfg.style_weight);

        for (size_t i = 0; i < samples.size(); ++i) {
            const RenderResult rr = render(cloud, samples[i].pose, rc);
            img::write_png(
                (out_dir / (img::frame_name(samples[i].frame_id) + ".png")).string(), rr.image);
        }
    }
}

} // namespace arit::splat
