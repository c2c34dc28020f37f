#include "arit/corruption/corruption.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "arit/common/rng.hpp"
#include "arit/common/threading.hpp"

namespace arit::corr {

using img::ImageTensor;

namespace {

// Severity tables (index = severity - 1). Intensity scales each parameter
// linearly from its identity value toward the table value.
constexpr double kNoiseSigma[5] = {0.04, 0.06, 0.08, 0.10, 0.14};
constexpr double kDarknessGain[5] = {0.8, 0.65, 0.5, 0.4, 0.3};
constexpr double kContrastFactor[5] = {0.75, 0.6, 0.45, 0.3, 0.2};
constexpr double kDefocusRadius[5] = {1, 2, 3, 4, 6};
constexpr double kMotionLength[5] = {3, 5, 7, 9, 13};
constexpr double kZoomMax[5] = {1.05, 1.10, 1.15, 1.20, 1.30};
constexpr double kFogBlend[5] = {0.15, 0.25, 0.35, 0.45, 0.6};

double lerp_param(double identity, double table, double intensity) {
    return identity + intensity * (table - identity);
}

// Odd-sized square kernel, normalized to sum 1, applied with edge replication.
struct Kernel {
    int radius = 0;
    std::vector<double> w; // (2r+1)^2 row-major

    double& at(int dy, int dx) { return w[size_t(dy + radius) * (2 * radius + 1) + (dx + radius)]; }
    double at(int dy, int dx) const {
        return w[size_t(dy + radius) * (2 * radius + 1) + (dx + radius)];
    }

    void normalize() {
        double s = 0.0;
        for (double v : w) s += v;
        if (s <= 0.0) throw NumericError("corruption kernel has non-positive mass");
        for (double& v : w) v /= s;
    }
};

ImageTensor convolve(const ImageTensor& im, const Kernel& k) {
    ImageTensor out(im.height, im.width, im.channels);
    const int r = k.radius;
    for (int y = 0; y < im.height; ++y)
        for (int x = 0; x < im.width; ++x)
            for (int c = 0; c < im.channels; ++c) {
                double acc = 0.0;
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx) {
                        double wv = k.at(dy, dx);
                        if (wv != 0.0) acc += wv * im.at_clamped(y + dy, x + dx, c);
                    }
                out.at(y, x, c) = float(acc);
            }
    return out;
}

Kernel disk_kernel(double radius) {
    Kernel k;
    k.radius = int(std::ceil(radius + 0.5));
    k.w.assign(size_t(2 * k.radius + 1) * (2 * k.radius + 1), 0.0);
    for (int dy = -k.radius; dy <= k.radius; ++dy)
        for (int dx = -k.radius; dx <= k.radius; ++dx) {
            double d = std::sqrt(double(dy * dy + dx * dx));
            k.at(dy, dx) = std::clamp(radius + 0.5 - d, 0.0, 1.0); // anti-aliased rim
        }
    k.normalize();
    return k;
}

Kernel line_kernel(double length, double angle) {
    Kernel k;
    double half = (length - 1.0) / 2.0;
    double cx = std::cos(angle), cy = std::sin(angle);
    k.radius = int(std::ceil(std::abs(half) + 1));
    k.w.assign(size_t(2 * k.radius + 1) * (2 * k.radius + 1), 0.0);
    int n = std::max(2, int(std::ceil(length * 4)));
    for (int i = 0; i < n; ++i) {
        double t = -half + (2.0 * half) * double(i) / double(n - 1);
        double px = t * cx, py = t * cy;
        int x0 = int(std::floor(px)), y0 = int(std::floor(py));
        double fx = px - x0, fy = py - y0;
        // bilinear splat of each sample point
        k.at(y0, x0) += (1 - fx) * (1 - fy);
        k.at(y0, x0 + 1) += fx * (1 - fy);
        k.at(y0 + 1, x0) += (1 - fx) * fy;
        k.at(y0 + 1, x0 + 1) += fx * fy;
    }
    k.normalize();
    return k;
}

float bilinear(const ImageTensor& im, double y, double x, int c) {
    int x0 = int(std::floor(x)), y0 = int(std::floor(y));
    double fx = x - x0, fy = y - y0;
    double v00 = im.at_clamped(y0, x0, c), v01 = im.at_clamped(y0, x0 + 1, c);
    double v10 = im.at_clamped(y0 + 1, x0, c), v11 = im.at_clamped(y0 + 1, x0 + 1, c);
    return float((v00 * (1 - fx) + v01 * fx) * (1 - fy) + (v10 * (1 - fx) + v11 * fx) * fy);
}

ImageTensor zoom_blur(const ImageTensor& im, double max_zoom) {
    const int n_steps = 10;
    const double cy = (im.height - 1) / 2.0, cx = (im.width - 1) / 2.0;
    ImageTensor out(im.height, im.width, im.channels);
    std::vector<double> acc(im.size(), 0.0);
    for (int j = 0; j < n_steps; ++j) {
        double z = 1.0 + (max_zoom - 1.0) * double(j) / double(n_steps - 1);
        for (int y = 0; y < im.height; ++y)
            for (int x = 0; x < im.width; ++x) {
                double sy = cy + (y - cy) / z;
                double sx = cx + (x - cx) / z;
                for (int c = 0; c < im.channels; ++c)
                    acc[(size_t(y) * im.width + x) * im.channels + c] += bilinear(im, sy, sx, c);
            }
    }
    for (size_t i = 0; i < acc.size(); ++i) out.data[i] = float(acc[i] / n_steps);
    return out;
}

// Diamond-square fractal on a (2^n+1)^2 grid, min-max normalized to [0,1].
img::FloatMap plasma(int height, int width, std::uint64_t seed, double roughness) {
    int need = std::max(height, width) - 1;
    int n = 1;
    while (n < need) n *= 2;
    const int g = n + 1;
    std::vector<double> v(size_t(g) * g, 0.0);
    auto at = [&](int y, int x) -> double& { return v[size_t(y) * g + x]; };

    Rng rng(seed);
    at(0, 0) = rng.uniform();
    at(0, n) = rng.uniform();
    at(n, 0) = rng.uniform();
    at(n, n) = rng.uniform();

    double scale = 0.5;
    for (int step = n; step > 1; step /= 2) {
        int half = step / 2;
        // diamond: centers of squares
        for (int y = half; y < g; y += step)
            for (int x = half; x < g; x += step) {
                double avg = (at(y - half, x - half) + at(y - half, x + half) +
                              at(y + half, x - half) + at(y + half, x + half)) /
                             4.0;
                at(y, x) = avg + scale * (rng.uniform() * 2.0 - 1.0);
            }
        // square: edge midpoints, averaging whichever diamond neighbors exist
        for (int y = 0; y < g; y += half)
            for (int x = (y / half) % 2 == 0 ? half : 0; x < g; x += step) {
                double sum = 0.0;
                int cnt = 0;
                if (y - half >= 0) { sum += at(y - half, x); ++cnt; }
                if (y + half < g) { sum += at(y + half, x); ++cnt; }
                if (x - half >= 0) { sum += at(y, x - half); ++cnt; }
                if (x + half < g) { sum += at(y, x + half); ++cnt; }
                at(y, x) = sum / cnt + scale * (rng.uniform() * 2.0 - 1.0);
            }
        scale *= roughness;
    }

    double lo = v[0], hi = v[0];
    for (double x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    img::FloatMap out(height, width);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            out.at(y, x) = hi > lo ? float((at(y, x) - lo) / (hi - lo)) : 0.5f;
    return out;
}

} // namespace

const char* kind_name(CorruptionKind kind) {
    switch (kind) {
        case CorruptionKind::darkness: return "darkness";
        case CorruptionKind::zoom_blur: return "zoom_blur";
        case CorruptionKind::defocus_blur: return "defocus_blur";
        case CorruptionKind::contrast: return "contrast";
        case CorruptionKind::motion_blur: return "motion_blur";
        case CorruptionKind::fog: return "fog";
        case CorruptionKind::gaussian_noise: return "gaussian_noise";
    }
    throw ConfigError("unknown corruption kind enum value");
}

CorruptionKind kind_from_name(const std::string& name) {
    for (int i = 0; i < kNumKinds; ++i)
        if (name == kind_name(CorruptionKind(i))) return CorruptionKind(i);
    throw ConfigError("unknown corruption kind: " + name);
}

void CorruptionSpec::validate() const {
    if (int(kind) < 0 || int(kind) >= kNumKinds) throw ConfigError("corruption: bad kind");
    if (severity < 1 || severity > 5) throw ConfigError("corruption: severity must be in 1..5");
    if (!(intensity >= 0.0 && intensity <= 1.0))
        throw ConfigError("corruption: intensity must be in [0,1]");
    if (!std::isfinite(angle)) throw ConfigError("corruption: non-finite angle");
}

ImageTensor apply_corruption(const ImageTensor& image, const CorruptionSpec& spec,
                             std::uint64_t seed) {
    image.check_shape();
    spec.validate();
    if (spec.intensity == 0.0) return image; // exact identity by contract

    const int si = spec.severity - 1;
    ImageTensor out;
    switch (spec.kind) {
        case CorruptionKind::darkness: {
            double gain = lerp_param(1.0, kDarknessGain[si], spec.intensity);
            out = image;
            for (float& v : out.data) v = float(v * gain);
            break;
        }
        case CorruptionKind::contrast: {
            double f = lerp_param(1.0, kContrastFactor[si], spec.intensity);
            double mu = image.mean();
            out = image;
            for (float& v : out.data) v = float((v - mu) * f + mu);
            break;
        }
        case CorruptionKind::gaussian_noise: {
            double sigma = lerp_param(0.0, kNoiseSigma[si], spec.intensity);
            Rng rng(seed);
            out = image;
            for (float& v : out.data) v = float(v + sigma * rng.normal());
            break;
        }
        case CorruptionKind::defocus_blur: {
            double radius = lerp_param(0.0, kDefocusRadius[si], spec.intensity);
            out = convolve(image, disk_kernel(radius));
            break;
        }
        case CorruptionKind::motion_blur: {
            double length = lerp_param(1.0, kMotionLength[si], spec.intensity);
            out = convolve(image, line_kernel(length, spec.angle));
            break;
        }
        case CorruptionKind::zoom_blur: {
            double z = lerp_param(1.0, kZoomMax[si], spec.intensity);
            out = zoom_blur(image, z);
            break;
        }
        case CorruptionKind::fog: {
            double t = lerp_param(0.0, kFogBlend[si], spec.intensity);
            img::FloatMap p = plasma(image.height, image.width, seed, 0.65);
            out = image;
            for (int y = 0; y < image.height; ++y)
                for (int x = 0; x < image.width; ++x)
                    for (int c = 0; c < image.channels; ++c)
                        out.at(y, x, c) = float((1.0 - t) * image.at(y, x, c) + t * p.at(y, x));
            break;
        }
        default:
            throw ConfigError("unknown corruption kind");
    }
    out.clip01();
    return out;
}

std::pair<CorruptionSpec, CorruptionSpec> sample_policy(const CorruptionPolicy& policy,
                                                        int frame_id) {
    if (policy.severity_lo > policy.severity_hi || policy.severity_lo < 1 ||
        policy.severity_hi > 5)
        throw ConfigError("corruption policy: bad severity range");

    Rng rng(hash64({policy.seed, std::uint64_t(frame_id)}));
    int k1 = int(rng.uniform_int(0, kNumKinds - 1));
    int k2 = int(rng.uniform_int(0, kNumKinds - 2));
    if (k2 >= k1) ++k2; // uniform over the remaining six kinds

    auto draw = [&](int kind) {
        CorruptionSpec s;
        s.kind = CorruptionKind(kind);
        s.severity = int(rng.uniform_int(policy.severity_lo, policy.severity_hi));
        s.intensity = policy.force_zero_intensity ? 0.0 : rng.uniform(0.5, 1.0);
        if (s.kind == CorruptionKind::motion_blur) s.angle = rng.uniform(0.0, M_PI);
        return s;
    };
    CorruptionSpec s1 = draw(k1);
    CorruptionSpec s2 = draw(k2);
    return {s1, s2};
}

std::uint64_t frame_seed(const CorruptionPolicy& policy, int frame_id, CorruptionKind kind) {
    return hash64({policy.seed, std::uint64_t(frame_id), std::uint64_t(int(kind))});
}

BenchmarkResult build_benchmark(const std::vector<img::SceneSample>& dataset,
                                const CorruptionPolicy& policy) {
    if (dataset.empty()) throw DataError("build_benchmark: empty dataset");
    BenchmarkResult res;
    res.samples = dataset;
    res.log.resize(dataset.size());
    parallel_for(int(dataset.size()), [&](int i) {
        img::SceneSample& s = res.samples[size_t(i)];
        auto [c1, c2] = sample_policy(policy, s.frame_id);
        std::uint64_t seed1 = frame_seed(policy, s.frame_id, c1.kind);
        std::uint64_t seed2 = frame_seed(policy, s.frame_id, c2.kind);
        s.real_image = apply_corruption(apply_corruption(s.real_image, c1, seed1), c2, seed2);
        res.log[size_t(i)] = FrameCorruptionRecord{s.frame_id, {c1, c2}, {seed1, seed2}};
    });
    return res;
}

void write_spec_log(const std::string& path, const std::vector<FrameCorruptionRecord>& log) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open spec log for writing: " + path);
    for (const auto& rec : log) {
        nlohmann::json j;
        j["frame_id"] = rec.frame_id;
        nlohmann::json specs = nlohmann::json::array();
        for (int i = 0; i < 2; ++i) {
            specs.push_back({{"kind", kind_name(rec.specs[i].kind)},
                             {"severity", rec.specs[i].severity},
                             {"intensity", rec.specs[i].intensity},
                             {"angle", rec.specs[i].angle},
                             {"seed", rec.seeds[i]}});
        }
        j["specs"] = specs;
        f << j.dump() << "\n";
    }
}

std::vector<FrameCorruptionRecord> read_spec_log(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open spec log: " + path);
    std::vector<FrameCorruptionRecord> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("malformed spec log line in " + path + ": " + e.what());
        }
        FrameCorruptionRecord rec;
        rec.frame_id = j.at("frame_id").get<int>();
        const auto& specs = j.at("specs");
        if (specs.size() != 2) throw DataError("spec log line must contain exactly 2 specs");
        for (int i = 0; i < 2; ++i) {
            rec.specs[i].kind = kind_from_name(specs[i].at("kind").get<std::string>());
            rec.specs[i].severity = specs[i].at("severity").get<int>();
            rec.specs[i].intensity = specs[i].at("intensity").get<double>();
            rec.specs[i].angle = specs[i].at("angle").get<double>();
            rec.seeds[i] = specs[i].at("seed").get<std::uint64_t>();
            rec.specs[i].validate();
        }
        out.push_back(rec);
    }
    return out;
}

} // namespace arit::corr
