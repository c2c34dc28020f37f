#include "arit/imagecore/lumen.hpp"

#include <cmath>
#include <cstdio>

#include <Eigen/Dense>

#include "arit/common/rng.hpp"
#include "arit/common/threading.hpp"

namespace arit::img {

namespace {

using Eigen::Vector2d;
using Eigen::Vector3d;

double parse_double(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("generator param '" + key + "' is not a number: " + value);
    }
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// --- value noise -----------------------------------------------------------

double lattice_value(std::uint64_t seed, std::int64_t x, std::int64_t y, std::int64_t z) {
    std::uint64_t h = hash64({seed, std::uint64_t(x), std::uint64_t(y), std::uint64_t(z)});
    return double(h >> 11) * 0x1.0p-53;
}

double smooth01(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise3(std::uint64_t seed, const Vector3d& p) {
    const std::int64_t xi = std::int64_t(std::floor(p.x()));
    const std::int64_t yi = std::int64_t(std::floor(p.y()));
    const std::int64_t zi = std::int64_t(std::floor(p.z()));
    const double fx = smooth01(p.x() - double(xi));
    const double fy = smooth01(p.y() - double(yi));
    const double fz = smooth01(p.z() - double(zi));
    double c[2][2][2];
    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx)
                c[dz][dy][dx] = lattice_value(seed, xi + dx, yi + dy, zi + dz);
    auto lerp = [](double a, double b, double t) { return a + (b - a) * t; };
    double x00 = lerp(c[0][0][0], c[0][0][1], fx);
    double x01 = lerp(c[0][1][0], c[0][1][1], fx);
    double x10 = lerp(c[1][0][0], c[1][0][1], fx);
    double x11 = lerp(c[1][1][0], c[1][1][1], fx);
    double y0 = lerp(x00, x01, fy);
    double y1 = lerp(x10, x11, fy);
    return lerp(y0, y1, fz);
}

// 4 octaves, persistence 0.5, normalized back to [0,1].
double fbm3(std::uint64_t seed, const Vector3d& p) {
    double sum = 0.0, amp = 1.0, norm = 0.0, freq = 1.0;
    for (int o = 0; o < 4; ++o) {
        sum += amp * value_noise3(seed + std::uint64_t(o), p * freq);
        norm += amp;
        amp *= 0.5;
        freq *= 2.0;
    }
    return sum / norm;
}

// --- tube geometry ----------------------------------------------------------

struct Tube {
    LumenParams p;
    double phase_x, phase_y, phase_r;

    Tube(const LumenParams& params, std::uint64_t seed) : p(params) {
        Rng rng(hash64({seed, 0x7475626570686173ULL}));
        phase_x = rng.uniform(0.0, 2.0 * M_PI);
        phase_y = rng.uniform(0.0, 2.0 * M_PI);
        phase_r = rng.uniform(0.0, 2.0 * M_PI);
    }

    Vector2d center(double z) const {
        return {p.amp_x * std::sin(p.freq_x * z + phase_x),
                p.amp_y * std::sin(p.freq_y * z + phase_y)};
    }
    Vector2d center_dz(double z) const {
        return {p.amp_x * p.freq_x * std::cos(p.freq_x * z + phase_x),
                p.amp_y * p.freq_y * std::cos(p.freq_y * z + phase_y)};
    }
    double radius(double z) const {
        return p.radius * (1.0 + p.radius_amp * std::sin(p.radius_freq * z + phase_r));
    }
    double radius_dz(double z) const {
        return p.radius * p.radius_amp * p.radius_freq * std::cos(p.radius_freq * z + phase_r);
    }

    // Signed distance-like field: negative inside the lumen, zero on the wall.
    double field(const Vector3d& q) const {
        Vector2d d = q.head<2>() - center(q.z());
        return d.norm() - radius(q.z());
    }

    Vector3d gradient(const Vector3d& q) const {
        Vector2d d = q.head<2>() - center(q.z());
        double len = d.norm();
        if (len < 1e-9) return Vector3d(0, 0, -radius_dz(q.z()));
        Vector2d dn = d / len;
        double gz = -dn.dot(center_dz(q.z())) - radius_dz(q.z());
        return Vector3d(dn.x(), dn.y(), gz);
    }
};

struct Hit {
    bool found = false;
    double t = 0.0; // ray length, mm
    Vector3d point = Vector3d::Zero();
};

Hit march(const Tube& tube, const Vector3d& origin, const Vector3d& dir, double t_max) {
    const double dt = 0.5;
    double t_lo = 0.0;
    double f_lo = tube.field(origin);
    Hit hit;
    for (double t = dt; t <= t_max; t += dt) {
        double f = tube.field(origin + t * dir);
        if (f >= 0.0) {
            // bisect the crossing
            double lo = t_lo, hi = t;
            for (int i = 0; i < 40; ++i) {
                double mid = 0.5 * (lo + hi);
                if (tube.field(origin + mid * dir) >= 0.0)
                    hi = mid;
                else
                    lo = mid;
            }
            hit.found = true;
            hit.t = hi;
            hit.point = origin + hi * dir;
            return hit;
        }
        t_lo = t;
        f_lo = f;
    }
    (void)f_lo;
    hit.t = t_max;
    return hit;
}

} // namespace

LumenParams LumenParams::from_map(const std::map<std::string, std::string>& kv) {
    LumenParams p;
    for (const auto& [k, v] : kv) {
        if (k == "radius") p.radius = parse_double(k, v);
        else if (k == "radius_amp") p.radius_amp = parse_double(k, v);
        else if (k == "radius_freq") p.radius_freq = parse_double(k, v);
        else if (k == "amp_x") p.amp_x = parse_double(k, v);
        else if (k == "amp_y") p.amp_y = parse_double(k, v);
        else if (k == "freq_x") p.freq_x = parse_double(k, v);
        else if (k == "freq_y") p.freq_y = parse_double(k, v);
        else if (k == "dz") p.dz = parse_double(k, v);
        else if (k == "far_clip") p.far_clip = parse_double(k, v);
        else if (k == "gain_min") p.gain_min = parse_double(k, v);
        else if (k == "gain_max") p.gain_max = parse_double(k, v);
        else throw ConfigError("unknown generator param: " + k);
    }
    if (p.radius <= 0 || p.far_clip <= 0 || p.dz <= 0)
        throw ConfigError("generator params: radius, far_clip, dz must be positive");
    return p;
}

std::map<std::string, std::string> LumenParams::to_map() const {
    return {{"radius", format_double(radius)},
            {"radius_amp", format_double(radius_amp)},
            {"radius_freq", format_double(radius_freq)},
            {"amp_x", format_double(amp_x)},
            {"amp_y", format_double(amp_y)},
            {"freq_x", format_double(freq_x)},
            {"freq_y", format_double(freq_y)},
            {"dz", format_double(dz)},
            {"far_clip", format_double(far_clip)},
            {"gain_min", format_double(gain_min)},
            {"gain_max", format_double(gain_max)}};
}

SceneSample render_lumen_frame(std::uint64_t seed, int frame_id, int resolution,
                               const LumenParams& params) {
    if (resolution < 32) throw ConfigError("lumen generator: resolution must be >= 32");
    if (frame_id < 0) throw ConfigError("lumen generator: negative frame id");

    const Tube tube(params, seed);
    const std::uint64_t tex_seed = hash64({seed, 0x74657874757265ULL});
    Rng gain_rng(hash64({seed, std::uint64_t(frame_id), 0x6761696eULL}));
    const double gain = gain_rng.uniform(params.gain_min, params.gain_max);

    const int res = resolution;
    const double fx = res / 2.0, fy = res / 2.0;
    const double cx = (res - 1) / 2.0, cy = (res - 1) / 2.0;

    const double z_cam = double(frame_id) * params.dz;
    const Vector2d c0 = tube.center(z_cam);
    const Vector2d cdz = tube.center_dz(z_cam);
    const Vector3d cam_pos(c0.x(), c0.y(), z_cam);
    const Vector3d cam_fwd = Vector3d(cdz.x(), cdz.y(), 1.0).normalized();
    const CameraPose pose = look_along(cam_pos, cam_fwd);

    SceneSample s;
    s.frame_id = frame_id;
    s.pose = pose;
    s.virtual_image = ImageTensor(res, res, 3);
    s.real_image = ImageTensor(res, res, 3);
    s.depth = FloatMap(res, res);

    for (int py = 0; py < res; ++py) {
        for (int px = 0; px < res; ++px) {
            Vector3d dc((px - cx) / fx, (py - cy) / fy, 1.0);
            dc.normalize();
            const Vector3d dw = pose.orientation * dc;
            const Hit hit = march(tube, cam_pos, dw, params.far_clip);

            const double zdepth = hit.t * dc.z();
            s.depth.at(py, px) = float(zdepth);

            // virtual domain: smooth depth shading only
            const double shade = 1.0 / (1.0 + zdepth / 30.0);
            s.virtual_image.at(py, px, 0) = float(0.52 * shade);
            s.virtual_image.at(py, px, 1) = float(0.58 * shade);
            s.virtual_image.at(py, px, 2) = float(0.72 * shade);

            // real domain: textured wall, headlight diffuse+specular, vignette
            const double vignette = dc.z() * dc.z() * dc.z() * dc.z();
            double r, g, b;
            if (hit.found) {
                const Vector3d n = -tube.gradient(hit.point).normalized(); // faces the lumen
                const double lambert = std::max(0.0, n.dot(-dw));
                const double atten = 1.0 / (1.0 + (hit.t / 60.0) * (hit.t / 60.0));
                const double noise = fbm3(tex_seed, hit.point / 6.0);
                const double tex = 0.55 + 0.9 * noise;
                const double spec = 0.5 * std::pow(lambert, 24.0) * atten;
                const double diff = lambert * atten;
                r = (0.80 * tex) * (0.06 + diff) + spec;
                g = (0.46 * tex) * (0.06 + diff) + spec;
                b = (0.44 * tex) * (0.06 + diff) + spec;
            } else {
                r = 0.030;
                g = 0.015;
                b = 0.015;
            }
            s.real_image.at(py, px, 0) = float(vignette * gain * r);
            s.real_image.at(py, px, 1) = float(vignette * gain * g);
            s.real_image.at(py, px, 2) = float(vignette * gain * b);
        }
    }
    s.virtual_image.clip01();
    s.real_image.clip01();
    return s;
}

LumenDataset generate_lumen_dataset(std::uint64_t seed, int n_frames, int resolution,
                                    const LumenParams& params) {
    if (n_frames < 1) throw ConfigError("lumen generator: n_frames must be >= 1");
    if (resolution < 32) throw ConfigError("lumen generator: resolution must be >= 32");

    LumenDataset out;
    out.samples.resize(size_t(n_frames));
    parallel_for(n_frames, [&](int i) {
        out.samples[size_t(i)] = render_lumen_frame(seed, i, resolution, params);
    });

    const int n_val = n_frames / 7;
    const int n_test = n_frames / 7;
    const int n_train = n_frames - n_val - n_test;
    DatasetManifest& m = out.manifest;
    m.resolution = resolution;
    m.seed = seed;
    m.generator_params = params.to_map();
    for (int i = 0; i < n_train; ++i) m.train.push_back(i);
    for (int i = n_train; i < n_train + n_val; ++i) m.val.push_back(i);
    for (int i = n_train + n_val; i < n_frames; ++i) m.test.push_back(i);
    m.validate();
    return out;
}

} // namespace arit::img
