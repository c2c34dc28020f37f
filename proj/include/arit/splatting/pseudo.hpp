#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "arit/splatting/gaussians.hpp"
#include "arit/splatting/perceptual.hpp"

namespace arit::splat {

using FramePose = std::pair<img::ImageTensor, img::CameraPose>;

// Total supervision objective over all frames:
//   L = sum_f content(render(cloud, pose_f), virtual_f)
//           + style_weight * style(render(cloud, pose_f), real_ref_f).
// real_refs must pair up with virtual_frames, or be empty when style_weight
// is 0. Computed in double precision end to end.
double supervision_loss(const GaussianCloud& cloud, const std::vector<FramePose>& virtual_frames,
                        const std::vector<img::ImageTensor>& real_refs,
                        const FeatureExtractor& fx, const RenderConfig& cfg,
                        double style_weight);

// Loss and its analytic gradient w.r.t. every color coefficient (one row per
// gaussian, k columns). Per-frame terms evaluate as an independent parallel
// map; the reduction folds in frame order, so results are thread-count
// independent.
std::pair<double, Eigen::MatrixXd> color_gradient(const GaussianCloud& cloud,
                                                  const std::vector<FramePose>& virtual_frames,
                                                  const std::vector<img::ImageTensor>& real_refs,
                                                  const FeatureExtractor& fx,
                                                  const RenderConfig& cfg, double style_weight);

// Plain gradient descent on colors only; positions, scales, rotations and
// alphas pass through bit-identical. Colors are clipped to [0,1] after each
// step. Throws NumericError if the loss turns non-finite.
GaussianCloud optimize_colors(GaussianCloud cloud, const std::vector<FramePose>& virtual_frames,
                              const std::vector<img::ImageTensor>& real_refs,
                              const FeatureExtractor& fx, const RenderConfig& cfg, int steps = 200,
                              double step_size = 0.05, double style_weight = 1.0);

struct PseudoConfig {
    int window = 25;           // frames reconstructed together
    int init_stride = 4;       // backprojection pixel stride
    int supervision_views = 5; // evenly spaced optimization targets per window
    int steps = 200;
    double step_size = 0.05;
    double style_weight = 1.0;
    uint64_t extractor_seed = 0;
};

// Artifact-free pseudo labels for the listed frames, written in dataset
// layout under dataset_root/pseudo/. Each window of consecutive frames is
// reconstructed from its depth maps and poses, color-tuned against the
// virtual images (content) and the frame-paired corrupted images from
// corrupted_dir (style), then re-rendered for every frame of the window.
void generate_pseudo_labels(const std::string& dataset_root, const std::string& corrupted_dir,
                            const std::vector<int>& frame_ids, const PseudoConfig& cfg = {});

} // namespace arit::splat
