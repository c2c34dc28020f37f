#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "arit/imagecore/image.hpp"

namespace arit::metrics {

// Peak signal-to-noise ratio in dB, data range 1.0. Returns `cap` when the
// MSE is below 1e-10 (exact or near-exact matches).
double psnr(const img::ImageTensor& a, const img::ImageTensor& b, double cap = 99.0);

// Windowed SSIM: 11x11 Gaussian window sigma=1.5, K1=0.01, K2=0.03, data
// range 1.0, channel-averaged, mean over valid (unpadded) window positions.
double ssim(const img::ImageTensor& a, const img::ImageTensor& b);

// --- distribution distances over precomputed feature rows -------------------

struct Moments {
    Eigen::VectorXd mu;
    Eigen::MatrixXd cov; // 1/(n-1) normalization
};

Moments moments_of(const Eigen::MatrixXd& feats);

// Frechet distance between Gaussians: |mu_a-mu_b|^2 + Tr(Ca + Cb - 2(Ca Cb)^{1/2}).
// Matrix square roots via symmetric eigendecomposition; eigenvalues below 0
// are clipped (tolerance 1e-8). Exposed so tests can inject exact moments.
double fid_from_moments(const Moments& a, const Moments& b);

// feats_*: one feature vector per row.
double fid(const Eigen::MatrixXd& feats_a, const Eigen::MatrixXd& feats_b);

// Kernel distance with polynomial kernel k(x,y) = (x.y/d + 1)^3, averaged over
// n_subsets seeded subsamples of subset_size rows from each set. Each subset
// pair is canonically sorted before the paired U-statistic
//   1/(m(m-1)) sum_{i!=j} [k(xi,xj) + k(yi,yj) - k(xi,yj) - k(xj,yi)]
// so that equal multisets cancel exactly, independent of input order.
double kid(const Eigen::MatrixXd& feats_a, const Eigen::MatrixXd& feats_b, int subset_size,
           int n_subsets, std::uint64_t seed);

// Defaults: subset_size = min(100, n), n_subsets = 10.
double kid_default(const Eigen::MatrixXd& feats_a, const Eigen::MatrixXd& feats_b,
                   std::uint64_t seed);

// --- depth / retrieval / feature metrics ------------------------------------

struct DepthErrors {
    double abs_rel = 0.0;
    double sq_rel = 0.0;
    double rmse = 0.0;
};

// valid: same size as the maps, nonzero = counted; empty = all pixels valid.
DepthErrors depth_errors(const img::FloatMap& pred, const img::FloatMap& gt,
                         const std::vector<std::uint8_t>& valid = {});

// Fraction of queries whose retrieved position lies within threshold_mm.
double recall_at(const std::vector<Eigen::Vector3d>& query_positions,
                 const std::vector<Eigen::Vector3d>& retrieved_positions,
                 double threshold_mm = 5.0);

// ||a - b||_2 / sqrt(element count)
double feature_map_distance(const std::vector<float>& a, const std::vector<float>& b);

// --- rank correlation --------------------------------------------------------

struct KendallResult {
    double tau = 0.0;
    double p_value = 1.0;
};

// tau-b with tie correction. Two-sided p-value: exact permutation enumeration
// for n <= 10, tie-corrected normal approximation otherwise.
KendallResult kendall_tau(const std::vector<double>& xs, const std::vector<double>& ys);

// Two-sample t statistic with unequal variances (Welch).
double welch_t(const std::vector<double>& a, const std::vector<double>& b);

} // namespace arit::metrics
