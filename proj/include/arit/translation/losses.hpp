#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "arit/translation/networks.hpp"

namespace arit::translation {

// Plain-value loss computations used for reporting and verification. The
// training step computes the same quantities on the autodiff tape; these
// standalone forms are the reference the step is checked against.

// Adversarial objective over flattened patch-score maps:
//   mean log(1 - D(G(s))) + mean log D(t)
// The discriminator ascends this; the generator descends the first term.
// Scores are clamped at 1e-7 from both ends before the log.
double gan_loss(const std::vector<double>& fake_scores, const std::vector<double>& real_scores);

using ImageFn = std::function<ImageTensor(const ImageTensor&)>;
using ScoreFn = std::function<std::vector<double>(const ImageTensor&)>;

// Two-sided reconstruction consistency:
//   mean|g_ts(g_st(s)) - s| + mean|g_st(g_ts(t)) - t|
// with per-pixel means. Generators are passed as callables so tests can
// substitute analytic maps (identity, +delta) without network plumbing.
double cycle_loss(const ImageFn& g_st, const ImageFn& g_ts,
                  const std::vector<ImageTensor>& s_batch,
                  const std::vector<ImageTensor>& t_batch);

// One contrastive batch: P queries with aligned positives and M shared
// negatives per query, all unit-norm after projection.
struct PatchFeatureBatch {
    std::vector<int> positions;            // P distinct flat spatial indices
    Eigen::MatrixXd queries;               // P x k
    Eigen::MatrixXd positives;             // P x k
    std::vector<Eigen::MatrixXd> negatives; // P entries of M x k

    void validate() const;
};

using Projector = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Draws P query positions and M negative positions (all distinct) from the
// shared spatial grid of the two feature maps. Queries/negatives come from
// the noisy-domain map, positives from the virtual-domain map at the same
// position as their query. Projected vectors are L2-normalized.
PatchFeatureBatch sample_patch_pairs(const nn::Tensor<float>& feat_noisy,
                                     const nn::Tensor<float>& feat_virtual, int P, int M,
                                     uint64_t seed, const Projector& project_query,
                                     const Projector& project_positive);

// Convenience overload with identity projections.
PatchFeatureBatch sample_patch_pairs(const nn::Tensor<float>& feat_noisy,
                                     const nn::Tensor<float>& feat_virtual, int P, int M,
                                     uint64_t seed);

// (1/P) sum_j -log[ exp(qj.kpj/tau) / (exp(qj.kpj/tau) + sum_i exp(qj.ni/tau)) ]
double resilient_loss(const PatchFeatureBatch& batch, double tau);

struct LossWeights {
    double lambda_cyc = 10.0;
    double lambda_pair = 0.0; // 1.0 when pseudo-labels are frame-paired
    double lambda_nce = 1.0;
    bool non_saturating = true; // generator term flag; the literal form is used when false
};

struct ObjectiveTerms {
    double gan_forward = 0.0;  // L_GAN for the s->t generator/discriminator
    double gan_backward = 0.0; // L_GAN for the t->s pair
    double cycle = 0.0;
    double paired = 0.0;
    double total = 0.0;
};

// Composite objective over callables; the bundled-network overloads below
// build the callables from real networks.
ObjectiveTerms composite_objective(const ImageFn& g_st, const ImageFn& g_ts,
                                   const ScoreFn& d_t, const ScoreFn& d_s,
                                   const std::vector<ImageTensor>& s_batch,
                                   const std::vector<ImageTensor>& t_batch, double lambda_cyc,
                                   double lambda_pair,
                                   const std::vector<ImageTensor>* paired_targets);

// First-stage composite: noisy -> pseudo-clean with optional frame-paired
// supervision.
ObjectiveTerms local_objective(ModelBundle<float>& model,
                               const std::vector<ImageTensor>& noisy_batch,
                               const std::vector<ImageTensor>& clean_batch,
                               const LossWeights& weights,
                               const std::vector<ImageTensor>* paired_pseudo = nullptr);

// Second-stage composite: pseudo-clean -> virtual, no paired term.
ObjectiveTerms global_objective(ModelBundle<float>& model,
                                const std::vector<ImageTensor>& clean_batch,
                                const std::vector<ImageTensor>& virtual_batch,
                                const LossWeights& weights);

// Full inference pass plus the two feature maps used by the contrastive
// term: the first-stage encoder on the noisy input and the virtual-side
// encoder applied to the generated virtual image.
struct ForwardFullResult {
    ImageTensor r_hat;
    ImageTensor v_hat;
    nn::Tensor<float> feat_noisy;
    nn::Tensor<float> feat_virtual;
};

ForwardFullResult forward_full(const ImageTensor& noisy, ModelBundle<float>& model);

// Patch-score map of a discriminator on one image, flattened row-major.
std::vector<double> discriminator_scores(Discriminator<float>& disc, const ImageTensor& image);

} // namespace arit::translation
