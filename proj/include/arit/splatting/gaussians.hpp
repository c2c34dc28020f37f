#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "arit/common/error.hpp"
#include "arit/imagecore/dataset.hpp"
#include "arit/imagecore/image.hpp"
#include "arit/imagecore/pose.hpp"

namespace arit::splat {

// One anisotropic 3D gaussian primitive. Colors are degree-0 spherical
// harmonics (plain per-channel values); c.size() is the color dimension k
// and must match across a cloud.
struct Gaussian3D {
    Eigen::Vector3d x = Eigen::Vector3d::Zero();   // center, mm
    Eigen::Vector3d s = Eigen::Vector3d::Ones();   // per-axis scale, mm, > 0
    Eigen::Quaterniond q = Eigen::Quaterniond::Identity(); // unit rotation
    double alpha = 1.0;                            // opacity in (0, 1]
    Eigen::VectorXd c = Eigen::VectorXd::Zero(3);  // color coefficients

    void validate() const;
};

struct GaussianCloud {
    std::vector<Gaussian3D> gaussians;
    Eigen::Vector3d bounds_min = Eigen::Vector3d::Zero(); // axis-aligned box, mm
    Eigen::Vector3d bounds_max = Eigen::Vector3d::Zero();

    int color_dim() const;
    void fit_bounds();   // shrink-wrap the box onto the current centers
    void validate() const;
};

// Pinhole camera + clipping for the splatting rasterizer.
struct RenderConfig {
    int width = 64, height = 64;       // pixels
    double fx = 32.0, fy = 32.0;       // focal lengths, pixels
    double cx = 31.5, cy = 31.5;       // principal point, pixels
    double near_clip = 0.1;            // mm
    double far_clip = 1e4;             // mm
    double cutoff = 3.0;               // Mahalanobis radius beyond which a = 0
    double max_condition = 1e8;        // cov2d degeneracy threshold

    // Intrinsics convention of the synthetic datasets: f = res/2 and the
    // principal point on the center of the pixel grid.
    static RenderConfig for_image(int width, int height);

    void validate() const;
};

// Sigma = R S S^T R^T: the world-space covariance of a gaussian with rotation
// q and per-axis scales s. Eigenvalues are s^2 as a set.
Eigen::Matrix3d covariance_from(const Eigen::Quaterniond& q, const Eigen::Vector3d& s);

struct ProjectedGaussian {
    Eigen::Vector2d mean2d;  // pixel coordinates
    Eigen::Matrix2d cov2d;   // pixel^2, from the local-affine perspective map
    double depth = 0.0;      // camera-space z, mm
};

// Perspective projection of one gaussian; nullopt when the center's camera
// depth falls outside [near, far].
std::optional<ProjectedGaussian> project_gaussian(const Gaussian3D& g, const img::CameraPose& pose,
                                                  const RenderConfig& cfg);

struct RenderResult {
    img::ImageTensor image;      // composited colors clipped to [0,1]
    std::vector<double> values;  // same pixels before float quantization, HWC
    int skipped = 0;             // gaussians dropped for degenerate cov2d

    // Per pixel: (cloud index, compositing weight w_i) front-to-back, only
    // when requested. w_i = a_i * prod_{j<i} (1 - a_j), so dC/dc_i = w_i.
    std::vector<std::vector<std::pair<int, double>>> weights;

    const std::vector<std::pair<int, double>>& weights_at(int y, int x) const {
        return weights[size_t(y) * image.width + x];
    }
};

// Front-to-back alpha compositing of the cloud under the given camera.
// Per-gaussian pixel opacity a_i = alpha_i * exp(-1/2 d^T cov2d^-1 d), clipped
// to [0, 0.999] and zeroed beyond cfg.cutoff.
RenderResult render(const GaussianCloud& cloud, const img::CameraPose& pose,
                    const RenderConfig& cfg, bool keep_weights = false);

// Seeds a cloud from known geometry: backprojects every stride-th pixel of
// every sample, isotropic scale = depth/f * stride/2, alpha 0.8, color from
// the virtual image. Points closer than half a footprint to an already
// accepted point are dropped.
GaussianCloud init_cloud_from_depth(const std::vector<img::SceneSample>& samples, int stride,
                                    const RenderConfig& cfg);

// Flat binary cloud format: little-endian 'GSPC' magic, u32 version, u32
// count, u32 k, then per gaussian x[3] s[3] q[4](w,x,y,z) alpha c[k], all f32.
void write_cloud(const std::string& path, const GaussianCloud& cloud);
GaussianCloud read_cloud(const std::string& path);

} // namespace arit::splat
