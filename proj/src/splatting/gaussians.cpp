#include "arit/splatting/gaussians.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "arit/common/threading.hpp"

namespace arit::splat {

void Gaussian3D::validate() const {
    if (!x.allFinite()) throw DataError("Gaussian3D: non-finite position");
    if (!(s.minCoeff() > 0.0) || !s.allFinite())
        throw DataError("Gaussian3D: scales must be positive");
    if (std::abs(q.norm() - 1.0) > 1e-6)
        throw DataError("Gaussian3D: quaternion norm must be 1 within 1e-6");
    if (!(alpha > 0.0) || alpha > 1.0) throw DataError("Gaussian3D: alpha must be in (0,1]");
    if (c.size() == 0 || !c.allFinite()) throw DataError("Gaussian3D: bad color vector");
}

int GaussianCloud::color_dim() const {
    return gaussians.empty() ? 0 : int(gaussians.front().c.size());
}

void GaussianCloud::fit_bounds() {
    if (gaussians.empty()) throw DataError("GaussianCloud: empty cloud");
    bounds_min = bounds_max = gaussians.front().x;
    for (const Gaussian3D& g : gaussians) {
        bounds_min = bounds_min.cwiseMin(g.x);
        bounds_max = bounds_max.cwiseMax(g.x);
    }
}

void GaussianCloud::validate() const {
    if (gaussians.empty()) throw DataError("GaussianCloud: empty cloud");
    const int k = color_dim();
    for (const Gaussian3D& g : gaussians) {
        g.validate();
        if (int(g.c.size()) != k) throw DataError("GaussianCloud: mixed color dimensions");
        if ((g.x.array() < bounds_min.array()).any() || (g.x.array() > bounds_max.array()).any())
            throw DataError("GaussianCloud: position outside bounds");
    }
}

RenderConfig RenderConfig::for_image(int width, int height) {
    RenderConfig cfg;
    cfg.width = width;
    cfg.height = height;
    cfg.fx = width / 2.0;
    cfg.fy = height / 2.0;
    cfg.cx = (width - 1) / 2.0;
    cfg.cy = (height - 1) / 2.0;
    return cfg;
}

void RenderConfig::validate() const {
    if (width < 8 || height < 8) throw DataError("RenderConfig: resolution must be >= 8");
    if (!(fx > 0.0) || !(fy > 0.0)) throw DataError("RenderConfig: focal lengths must be > 0");
    if (!(near_clip > 0.0) || !(near_clip < far_clip))
        throw DataError("RenderConfig: need 0 < near < far");
    if (!(cutoff > 0.0)) throw DataError("RenderConfig: cutoff must be > 0");
}

Eigen::Matrix3d covariance_from(const Eigen::Quaterniond& q, const Eigen::Vector3d& s) {
    if (!(s.minCoeff() > 0.0)) throw DataError("covariance_from: scales must be positive");
    if (std::abs(q.norm() - 1.0) > 1e-6)
        throw DataError("covariance_from: quaternion norm must be 1 within 1e-6");
    const Eigen::Matrix3d rs = q.normalized().toRotationMatrix() * s.asDiagonal();
    return rs * rs.transpose();
}

std::optional<ProjectedGaussian> project_gaussian(const Gaussian3D& g, const img::CameraPose& pose,
                                                  const RenderConfig& cfg) {
    const Eigen::Vector3d t = pose.to_camera(g.x);
    const double z = t.z();
    if (z < cfg.near_clip || z > cfg.far_clip) return std::nullopt;

    ProjectedGaussian out;
    out.depth = z;
    out.mean2d = {cfg.fx * t.x() / z + cfg.cx, cfg.fy * t.y() / z + cfg.cy};

    // First-order (local affine) perspective map at the center.
    Eigen::Matrix<double, 2, 3> jac;
    jac << cfg.fx / z, 0.0, -cfg.fx * t.x() / (z * z),
           0.0, cfg.fy / z, -cfg.fy * t.y() / (z * z);
    const Eigen::Matrix3d w = pose.orientation.conjugate().toRotationMatrix();
    const Eigen::Matrix3d cov_cam = w * covariance_from(g.q, g.s) * w.transpose();
    out.cov2d = jac * cov_cam * jac.transpose();
    return out;
}

namespace {

struct Splat {
    int index;                // position in the cloud
    double depth;
    Eigen::Vector2d mean;
    Eigen::Matrix2d inv_cov;
    double alpha;
    int x0, x1, y0, y1;       // inclusive pixel bounds of the cutoff ellipse
};

} // namespace

RenderResult render(const GaussianCloud& cloud, const img::CameraPose& pose,
                    const RenderConfig& cfg, bool keep_weights) {
    cloud.validate();
    cfg.validate();
    pose.validate();
    const int k = cloud.color_dim();
    if (k != 1 && k != 3) throw DataError("render: color dimension must be 1 or 3");

    RenderResult out;
    std::vector<Splat> splats;
    splats.reserve(cloud.gaussians.size());
    for (size_t i = 0; i < cloud.gaussians.size(); ++i) {
        const auto proj = project_gaussian(cloud.gaussians[i], pose, cfg);
        if (!proj) continue;
        const Eigen::Matrix2d& cv = proj->cov2d;
        // Symmetric 2x2 eigenvalues; reject non-positive or ill-conditioned
        // footprints before inverting.
        const double mid = 0.5 * (cv(0, 0) + cv(1, 1));
        const double rad = std::sqrt(std::max(0.0, 0.25 * (cv(0, 0) - cv(1, 1)) * (cv(0, 0) - cv(1, 1)) + cv(0, 1) * cv(0, 1)));
        const double lo = mid - rad, hi = mid + rad;
        if (!(lo > 0.0) || hi / lo > cfg.max_condition) {
            ++out.skipped;
            continue;
        }
        Splat sp;
        sp.index = int(i);
        sp.depth = proj->depth;
        sp.mean = proj->mean2d;
        const double det = cv(0, 0) * cv(1, 1) - cv(0, 1) * cv(1, 0);
        sp.inv_cov << cv(1, 1) / det, -cv(0, 1) / det, -cv(1, 0) / det, cv(0, 0) / det;
        sp.alpha = cloud.gaussians[i].alpha;
        const double rx = cfg.cutoff * std::sqrt(cv(0, 0));
        const double ry = cfg.cutoff * std::sqrt(cv(1, 1));
        sp.x0 = std::max(0, int(std::ceil(sp.mean.x() - rx)));
        sp.x1 = std::min(cfg.width - 1, int(std::floor(sp.mean.x() + rx)));
        sp.y0 = std::max(0, int(std::ceil(sp.mean.y() - ry)));
        sp.y1 = std::min(cfg.height - 1, int(std::floor(sp.mean.y() + ry)));
        if (sp.x0 > sp.x1 || sp.y0 > sp.y1) continue;
        splats.push_back(sp);
    }
    std::sort(splats.begin(), splats.end(), [](const Splat& a, const Splat& b) {
        return a.depth != b.depth ? a.depth < b.depth : a.index < b.index;
    });

    out.values.assign(size_t(cfg.height) * cfg.width * k, 0.0);
    if (keep_weights) out.weights.resize(size_t(cfg.height) * cfg.width);
    const double cut2 = cfg.cutoff * cfg.cutoff;

    // Rows are independent: each walks the depth-sorted splats that cover it,
    // so per-pixel compositing order is front-to-back for any thread count.
    parallel_for(cfg.height, [&](int y) {
        std::vector<double> transmit(size_t(cfg.width), 1.0);
        for (const Splat& sp : splats) {
            if (y < sp.y0 || y > sp.y1) continue;
            const Eigen::VectorXd& color = cloud.gaussians[size_t(sp.index)].c;
            for (int x = sp.x0; x <= sp.x1; ++x) {
                const Eigen::Vector2d d(x - sp.mean.x(), y - sp.mean.y());
                const double m2 = d.dot(sp.inv_cov * d);
                if (m2 > cut2) continue;
                const double a = std::min(sp.alpha * std::exp(-0.5 * m2), 0.999);
                const double wgt = a * transmit[size_t(x)];
                double* px = &out.values[(size_t(y) * cfg.width + x) * k];
                for (int ch = 0; ch < k; ++ch) px[ch] += color[ch] * wgt;
                if (keep_weights)
                    out.weights[size_t(y) * cfg.width + x].emplace_back(sp.index, wgt);
                transmit[size_t(x)] *= 1.0 - a;
            }
        }
    });

    for (double& v : out.values) v = std::clamp(v, 0.0, 1.0);
    out.image = img::ImageTensor(cfg.height, cfg.width, k);
    for (size_t i = 0; i < out.values.size(); ++i) out.image.data[i] = float(out.values[i]);
    return out;
}

GaussianCloud init_cloud_from_depth(const std::vector<img::SceneSample>& samples, int stride,
                                    const RenderConfig& cfg) {
    if (samples.empty()) throw DataError("init_cloud_from_depth: no samples");
    if (stride < 1) throw DataError("init_cloud_from_depth: stride must be >= 1");
    cfg.validate();

    GaussianCloud cloud;
    for (const img::SceneSample& sample : samples) {
        const img::ImageTensor& vi = sample.virtual_image;
        if (sample.depth.height != vi.height || sample.depth.width != vi.width)
            throw DataError("init_cloud_from_depth: depth/image shape mismatch");
        for (int y = 0; y < vi.height; y += stride)
            for (int x = 0; x < vi.width; x += stride) {
                const double z = sample.depth.at(y, x);
                if (!(z > 0.0) || !std::isfinite(z)) continue;
                Gaussian3D g;
                const Eigen::Vector3d cam((x - cfg.cx) / cfg.fx * z, (y - cfg.cy) / cfg.fy * z, z);
                g.x = sample.pose.to_world(cam);
                const double footprint = z / cfg.fx * stride / 2.0;
                g.s = Eigen::Vector3d::Constant(footprint);
                g.alpha = 0.8;
                g.c = Eigen::VectorXd(vi.channels);
                for (int ch = 0; ch < vi.channels; ++ch) g.c[ch] = vi.at(y, x, ch);

                const double limit2 = 0.25 * footprint * footprint;
                bool duplicate = false;
                for (const Gaussian3D& other : cloud.gaussians)
                    if ((other.x - g.x).squaredNorm() < limit2) {
                        duplicate = true;
                        break;
                    }
                if (!duplicate) cloud.gaussians.push_back(std::move(g));
            }
    }
    if (cloud.gaussians.empty()) throw DataError("init_cloud_from_depth: no valid depth pixels");
    cloud.fit_bounds();
    return cloud;
}

namespace {

constexpr char kMagic[4] = {'G', 'S', 'P', 'C'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw DataError("cloud file: truncated");
    return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
}

void put_f32(std::ostream& out, double v) {
    const float f = float(v);
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}

double get_f32(std::istream& in) {
    const uint32_t bits = get_u32(in);
    float f;
    std::memcpy(&f, &bits, 4);
    return double(f);
}

} // namespace

void write_cloud(const std::string& path, const GaussianCloud& cloud) {
    cloud.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cloud file: cannot open for write: " + path);
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, uint32_t(cloud.gaussians.size()));
    put_u32(out, uint32_t(cloud.color_dim()));
    for (const Gaussian3D& g : cloud.gaussians) {
        for (int i = 0; i < 3; ++i) put_f32(out, g.x[i]);
        for (int i = 0; i < 3; ++i) put_f32(out, g.s[i]);
        put_f32(out, g.q.w());
        put_f32(out, g.q.x());
        put_f32(out, g.q.y());
        put_f32(out, g.q.z());
        put_f32(out, g.alpha);
        for (int i = 0; i < g.c.size(); ++i) put_f32(out, g.c[i]);
    }
    if (!out) throw DataError("cloud file: write failed: " + path);
}

GaussianCloud read_cloud(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cloud file: cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("cloud file: bad magic: " + path);
    const uint32_t version = get_u32(in);
    if (version != kVersion) throw DataError("cloud file: unsupported version");
    const uint32_t count = get_u32(in);
    const uint32_t k = get_u32(in);
    if (count == 0 || k == 0) throw DataError("cloud file: empty cloud");

    GaussianCloud cloud;
    cloud.gaussians.resize(count);
    for (Gaussian3D& g : cloud.gaussians) {
        for (int i = 0; i < 3; ++i) g.x[i] = get_f32(in);
        for (int i = 0; i < 3; ++i) g.s[i] = get_f32(in);
        const double qw = get_f32(in), qx = get_f32(in), qy = get_f32(in), qz = get_f32(in);
        g.q = Eigen::Quaterniond(qw, qx, qy, qz);
        g.alpha = get_f32(in);
        g.c = Eigen::VectorXd(k);
        for (uint32_t i = 0; i < k; ++i) g.c[i] = get_f32(in);
    }
    cloud.fit_bounds();
    cloud.validate();
    return cloud;
}

} // namespace arit::splat
