#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "arit/common/rng.hpp"
#include "arit/imagecore/image_io.hpp"
#include "arit/imagecore/lumen.hpp"
#include "arit/splatting/gaussians.hpp"
#include "arit/splatting/perceptual.hpp"
#include "arit/splatting/pseudo.hpp"

using namespace arit;
using namespace arit::splat;
using img::CameraPose;
using img::ImageTensor;

namespace fs = std::filesystem;

namespace {

Gaussian3D make_gaussian(const Eigen::Vector3d& pos, double scale, double alpha,
                         const Eigen::Vector3d& color) {
    Gaussian3D g;
    g.x = pos;
    g.s = Eigen::Vector3d::Constant(scale);
    g.alpha = alpha;
    g.c = color;
    return g;
}

GaussianCloud cloud_of(std::vector<Gaussian3D> gs) {
    GaussianCloud cloud;
    cloud.gaussians = std::move(gs);
    cloud.fit_bounds();
    return cloud;
}

// Random cloud in front of an identity camera at the origin (+Z forward).
GaussianCloud random_cloud(uint64_t seed, int n, double z_lo = 15.0, double z_hi = 40.0) {
    Rng rng(seed);
    std::vector<Gaussian3D> gs;
    for (int i = 0; i < n; ++i) {
        Gaussian3D g;
        g.x = {rng.uniform(-6.0, 6.0), rng.uniform(-6.0, 6.0), rng.uniform(z_lo, z_hi)};
        g.s = Eigen::Vector3d::Constant(rng.uniform(2.0, 5.0));
        g.alpha = rng.uniform(0.3, 0.9);
        g.c = Eigen::Vector3d(rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8),
                              rng.uniform(0.2, 0.8));
        gs.push_back(g);
    }
    return cloud_of(std::move(gs));
}

ImageTensor random_image(uint64_t seed, int h, int w) {
    Rng rng(seed);
    ImageTensor im(h, w, 3);
    for (float& v : im.data) v = float(rng.uniform());
    return im;
}

Eigen::Quaterniond random_unit_quaternion(uint64_t seed) {
    Rng rng(seed);
    Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    q.normalize();
    return q;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "arit_test_splatting" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

// ---------------------------------------------------------------------------
// covariance

TEST_CASE("covariance: identity rotation cases") {
    const Eigen::Matrix3d id =
        covariance_from(Eigen::Quaterniond::Identity(), Eigen::Vector3d(1, 1, 1));
    CHECK((id - Eigen::Matrix3d::Identity()).norm() == doctest::Approx(0.0).epsilon(1e-12));

    const Eigen::Matrix3d diag =
        covariance_from(Eigen::Quaterniond::Identity(), Eigen::Vector3d(2, 1, 1));
    Eigen::Matrix3d want = Eigen::Vector3d(4, 1, 1).asDiagonal();
    CHECK((diag - want).norm() < 1e-12);
}

TEST_CASE("covariance: rotated scales keep eigenvalues s^2") {
    for (uint64_t seed : {11ULL, 12ULL, 13ULL}) {
        const Eigen::Quaterniond q = random_unit_quaternion(seed);
        const Eigen::Matrix3d cov = covariance_from(q, Eigen::Vector3d(2, 1, 1));
        CHECK((cov - cov.transpose()).norm() < 1e-12);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
        const Eigen::Vector3d ev = eig.eigenvalues();
        CHECK(std::abs(ev[0] - 1.0) < 1e-6);
        CHECK(std::abs(ev[1] - 1.0) < 1e-6);
        CHECK(std::abs(ev[2] - 4.0) < 1e-6);
    }
}

TEST_CASE("covariance: minimum eigenvalue bounded by smallest scale") {
    Rng rng(99);
    for (int i = 0; i < 20; ++i) {
        const Eigen::Quaterniond q = random_unit_quaternion(1000 + uint64_t(i));
        const Eigen::Vector3d s(rng.uniform(0.2, 3.0), rng.uniform(0.2, 3.0),
                                rng.uniform(0.2, 3.0));
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(covariance_from(q, s));
        CHECK(eig.eigenvalues().minCoeff() >= s.minCoeff() * s.minCoeff() - 1e-8);
    }
}

TEST_CASE("covariance: rejects bad scales and rotations") {
    CHECK_THROWS_AS(covariance_from(Eigen::Quaterniond::Identity(), {0, 1, 1}), DataError);
    CHECK_THROWS_AS(covariance_from(Eigen::Quaterniond::Identity(), {1, -1, 1}), DataError);
    CHECK_THROWS_AS(covariance_from(Eigen::Quaterniond(2, 0, 0, 0), {1, 1, 1}), DataError);
}

// ---------------------------------------------------------------------------
// projection

TEST_CASE("projection: optical axis lands on the principal point") {
    const RenderConfig cfg = RenderConfig::for_image(64, 64);
    const Gaussian3D g = make_gaussian({0, 0, 25}, 1.0, 0.5, {1, 1, 1});
    const auto proj = project_gaussian(g, CameraPose{}, cfg);
    REQUIRE(proj.has_value());
    CHECK(proj->mean2d.x() == doctest::Approx(cfg.cx).epsilon(1e-12));
    CHECK(proj->mean2d.y() == doctest::Approx(cfg.cy).epsilon(1e-12));
    CHECK(proj->depth == doctest::Approx(25.0));
}

TEST_CASE("projection: isotropic on-axis footprint is (f sigma / z)^2") {
    const RenderConfig cfg = RenderConfig::for_image(64, 64);
    const double sigma = 2.0, z = 25.0;
    const Gaussian3D g = make_gaussian({0, 0, z}, sigma, 0.5, {1, 1, 1});
    const auto proj = project_gaussian(g, CameraPose{}, cfg);
    REQUIRE(proj.has_value());
    const double want = (cfg.fx * sigma / z) * (cfg.fx * sigma / z);
    CHECK(proj->cov2d(0, 0) == doctest::Approx(want).epsilon(1e-9));
    CHECK(proj->cov2d(1, 1) == doctest::Approx(want).epsilon(1e-9));
    CHECK(std::abs(proj->cov2d(0, 1)) < 1e-9);
}

TEST_CASE("projection: culls outside the depth range") {
    const RenderConfig cfg = RenderConfig::for_image(64, 64);
    CHECK_FALSE(project_gaussian(make_gaussian({0, 0, -5}, 1, 0.5, {1, 1, 1}), CameraPose{}, cfg)
                    .has_value());
    CHECK_FALSE(project_gaussian(make_gaussian({0, 0, cfg.far_clip * 2}, 1, 0.5, {1, 1, 1}),
                                 CameraPose{}, cfg)
                    .has_value());
    CHECK(project_gaussian(make_gaussian({0, 0, cfg.near_clip * 2}, 1, 0.5, {1, 1, 1}),
                           CameraPose{}, cfg)
              .has_value());
}

TEST_CASE("projection: off-axis mean matches a Monte Carlo point cloud") {
    const RenderConfig cfg = RenderConfig::for_image(64, 64);
    Gaussian3D g = make_gaussian({4.0, -3.0, 30.0}, 1.0, 0.5, {1, 1, 1});
    g.s = {2.0, 1.0, 1.5};
    g.q = random_unit_quaternion(5);
    const CameraPose pose = img::look_along({2.0, 1.0, -4.0}, {-0.05, 0.08, 1.0});

    const auto proj = project_gaussian(g, pose, cfg);
    REQUIRE(proj.has_value());

    // Sample world-space points from the gaussian and project each exactly.
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(covariance_from(g.q, g.s));
    const Eigen::Matrix3d root = eig.eigenvectors() *
                                 eig.eigenvalues().cwiseSqrt().asDiagonal() *
                                 eig.eigenvectors().transpose();
    Rng rng(77);
    const int n = 200000;
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
    for (int i = 0; i < n; ++i) {
        const Eigen::Vector3d p =
            g.x + root * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
        const Eigen::Vector3d t = pose.to_camera(p);
        const Eigen::Vector2d px(cfg.fx * t.x() / t.z() + cfg.cx,
                                 cfg.fy * t.y() / t.z() + cfg.cy);
        mean += px;
        scatter += px * px.transpose();
    }
    mean /= n;
    scatter = scatter / n - mean * mean.transpose();

    CHECK((mean - proj->mean2d).norm() < 0.5);
    // The local-affine footprint should track the sampled scatter closely at
    // this mild perspective.
    CHECK((scatter - proj->cov2d).norm() / proj->cov2d.norm() < 0.05);
}

// ---------------------------------------------------------------------------
// rendering

TEST_CASE("render: single gaussian paints alpha-scaled color at its center") {
    const RenderConfig cfg = RenderConfig::for_image(64, 64);
    // Center chosen so the projection lands exactly on pixel (32, 32).
    const double z = 10.0;
    const double off = 0.5 * z / cfg.fx;
    Gaussian3D g = make_gaussian({off, off, z}, 0.5, 0.9, {0.25, 0.5, 0.75});
    const RenderResult rr = render(cloud_of({g}), CameraPose{}, cfg, true);

    for (int ch = 0; ch < 3; ++ch)
        CHECK(rr.values[(size_t(32) * 64 + 32) * 3 + ch] ==
              doctest::Approx(0.9 * g.c[ch]).epsilon(1e-12));
    REQUIRE(rr.weights_at(32, 32).size() == 1);
    CHECK(rr.weights_at(32, 32)[0].second == doctest::Approx(0.9).epsilon(1e-12));

    // Full opacity hits the 0.999 clip, the renderer's hard ceiling.
    g.alpha = 1.0;
    const RenderResult rs = render(cloud_of({g}), CameraPose{}, cfg);
    CHECK(rs.values[(size_t(32) * 64 + 32) * 3] == doctest::Approx(0.999 * 0.25).epsilon(1e-12));
}

TEST_CASE("render: two-layer compositing") {
    const RenderConfig cfg = RenderConfig::for_image(64, 64);
    const double off10 = 0.5 * 10.0 / cfg.fx, off20 = 0.5 * 20.0 / cfg.fx;
    const Gaussian3D front = make_gaussian({off10, off10, 10}, 0.5, 0.5, {1, 1, 1});
    const Gaussian3D back = make_gaussian({off20, off20, 20}, 1.0, 1.0, {0, 0, 0});
    const RenderResult rr = render(cloud_of({back, front}), CameraPose{}, cfg);
    CHECK(rr.values[(size_t(32) * 64 + 32) * 3] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("render: three-layer stack matches the compositing recurrence") {
    const RenderConfig cfg = RenderConfig::for_image(64, 64);
    const double alphas[3] = {0.3, 0.6, 0.9};
    const double colors[3] = {0.9, 0.5, 0.2};
    std::vector<Gaussian3D> gs;
    for (int i = 0; i < 3; ++i) {
        const double z = 10.0 + 5.0 * i;
        const double off = 0.5 * z / cfg.fx;
        gs.push_back(make_gaussian({off, off, z}, 0.4,
                                   alphas[i], {colors[i], colors[i], colors[i]}));
    }
    const RenderResult rr = render(cloud_of(gs), CameraPose{}, cfg);

    double want = 0.0, transmit = 1.0;
    for (int i = 0; i < 3; ++i) {
        want += colors[i] * alphas[i] * transmit;
        transmit *= 1.0 - alphas[i];
    }
    CHECK(rr.values[(size_t(32) * 64 + 32) * 3] == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("render: weights are front-to-back and sum to at most one") {
    const RenderConfig cfg = RenderConfig::for_image(48, 48);
    const GaussianCloud cloud = random_cloud(21, 40);
    const RenderResult rr = render(cloud, CameraPose{}, cfg, true);

    CHECK(rr.image.finite_in_unit_range());
    int covered = 0;
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x) {
            const auto& ws = rr.weights_at(y, x);
            if (!ws.empty()) ++covered;
            double sum = 0.0, last_depth = -1.0;
            for (const auto& [idx, w] : ws) {
                CHECK(w > 0.0);
                sum += w;
                const auto proj = project_gaussian(cloud.gaussians[size_t(idx)], CameraPose{}, cfg);
                REQUIRE(proj.has_value());
                CHECK(proj->depth >= last_depth);
                last_depth = proj->depth;
            }
            CHECK(sum <= 1.0 + 1e-12);
        }
    CHECK(covered > 500); // the cloud must actually hit the image
}

TEST_CASE("render: invariant under storage-order permutation") {
    const RenderConfig cfg = RenderConfig::for_image(48, 48);
    GaussianCloud cloud = random_cloud(22, 30);
    const RenderResult a = render(cloud, CameraPose{}, cfg);

    GaussianCloud shuffled = cloud;
    Rng rng(5);
    for (size_t i = shuffled.gaussians.size(); i > 1; --i)
        std::swap(shuffled.gaussians[i - 1],
                  shuffled.gaussians[size_t(rng.next_u64() % i)]);
    const RenderResult b = render(shuffled, CameraPose{}, cfg);
    CHECK(a.values == b.values);
}

TEST_CASE("render: color perturbation responds exactly by the stored weight") {
    const RenderConfig cfg = RenderConfig::for_image(48, 48);
    GaussianCloud cloud = random_cloud(23, 25);
    const RenderResult base = render(cloud, CameraPose{}, cfg, true);

    const double delta = 0.125;
    for (int pick : {0, 7, 19}) {
        GaussianCloud bumped = cloud;
        bumped.gaussians[size_t(pick)].c[1] += delta;
        const RenderResult rr = render(bumped, CameraPose{}, cfg);
        for (int y = 0; y < 48; ++y)
            for (int x = 0; x < 48; ++x) {
                double w = 0.0;
                for (const auto& [idx, wgt] : base.weights_at(y, x))
                    if (idx == pick) w = wgt;
                const size_t px = (size_t(y) * 48 + x) * 3 + 1;
                CHECK(rr.values[px] - base.values[px] == doctest::Approx(w * delta).epsilon(1e-9));
            }
    }
}

TEST_CASE("render: degenerate footprints are skipped and tallied") {
    const RenderConfig cfg = RenderConfig::for_image(64, 64);
    Gaussian3D flat = make_gaussian({0, 0, 20}, 1.0, 0.9, {1, 1, 1});
    flat.s = {1e-9, 1.0, 1.0}; // pancake edge-on: cov2d condition ~ 1e18
    const RenderResult rr = render(cloud_of({flat}), CameraPose{}, cfg);
    CHECK(rr.skipped == 1);
    CHECK(*std::max_element(rr.values.begin(), rr.values.end()) == 0.0);

    const RenderResult ok = render(random_cloud(31, 10), CameraPose{}, cfg);
    CHECK(ok.skipped == 0);
}

// ---------------------------------------------------------------------------
// cloud initialization from depth

namespace {

img::SceneSample planar_sample(int res, float depth_mm) {
    img::SceneSample s;
    s.virtual_image = random_image(17, res, res);
    s.real_image = s.virtual_image;
    s.depth = img::FloatMap(res, res, depth_mm);
    s.pose = CameraPose{};
    s.frame_id = 0;
    return s;
}

} // namespace

TEST_CASE("init_cloud_from_depth: counting bound and coplanarity") {
    const RenderConfig cfg = RenderConfig::for_image(64, 64);
    const img::SceneSample s = planar_sample(64, 10.0f);
    const GaussianCloud cloud = init_cloud_from_depth({s}, 4, cfg);

    CHECK(cloud.gaussians.size() <= 256);
    CHECK(cloud.gaussians.size() > 64);
    for (const Gaussian3D& g : cloud.gaussians) {
        CHECK(std::abs(g.x.z() - 10.0) < 1e-4);
        CHECK(g.alpha == doctest::Approx(0.8));
        // Isotropic scale tied to the pixel footprint at this depth.
        CHECK(g.s.x() == doctest::Approx(10.0 / cfg.fx * 4 / 2.0).epsilon(1e-12));
        CHECK(g.s.x() == g.s.y());
        CHECK(g.s.y() == g.s.z());
    }
    CHECK_NOTHROW(cloud.validate());
}

TEST_CASE("init_cloud_from_depth: colors come from the virtual image") {
    const RenderConfig cfg = RenderConfig::for_image(64, 64);
    const img::SceneSample s = planar_sample(64, 25.0f);
    const GaussianCloud cloud = init_cloud_from_depth({s}, 16, cfg);
    // stride 16 on a plane: no dedupe, order is raster order of sampled pixels
    REQUIRE(cloud.gaussians.size() == 16);
    const Gaussian3D& first = cloud.gaussians.front();
    for (int ch = 0; ch < 3; ++ch)
        CHECK(first.c[ch] == doctest::Approx(s.virtual_image.at(0, 0, ch)).epsilon(1e-9));
}

TEST_CASE("init_cloud_from_depth: duplicate frames add no duplicate points") {
    const RenderConfig cfg = RenderConfig::for_image(64, 64);
    const img::SceneSample s = planar_sample(64, 10.0f);
    const size_t single = init_cloud_from_depth({s}, 4, cfg).gaussians.size();
    const size_t doubled = init_cloud_from_depth({s, s}, 4, cfg).gaussians.size();
    CHECK(doubled == single);
}

TEST_CASE("init_cloud_from_depth: error cases") {
    const RenderConfig cfg = RenderConfig::for_image(64, 64);
    CHECK_THROWS_AS(init_cloud_from_depth({}, 4, cfg), DataError);

    img::SceneSample s = planar_sample(64, 10.0f);
    s.depth = img::FloatMap(64, 64, 0.0f); // nothing backprojectable
    CHECK_THROWS_AS(init_cloud_from_depth({s}, 4, cfg), DataError);
}

TEST_CASE("init_cloud_from_depth: reprojected depth order agrees with the depth map") {
    const img::LumenDataset ds = img::generate_lumen_dataset(11, 7, 64);
    const img::SceneSample& s = ds.samples.front();
    const RenderConfig cfg = RenderConfig::for_image(64, 64);
    const GaussianCloud cloud = init_cloud_from_depth({s}, 4, cfg);
    const RenderResult rr = render(cloud, s.pose, cfg, true);

    // Weighted mean contributor depth per covered pixel.
    std::vector<std::pair<size_t, double>> covered; // (pixel, composite depth)
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            const auto& ws = rr.weights_at(y, x);
            if (ws.empty()) continue;
            double dsum = 0.0, wsum = 0.0;
            for (const auto& [idx, w] : ws) {
                const auto proj = project_gaussian(cloud.gaussians[size_t(idx)], s.pose, cfg);
                dsum += w * proj->depth;
                wsum += w;
            }
            covered.emplace_back(size_t(y) * 64 + x, dsum / wsum);
        }
    REQUIRE(covered.size() > 1000);

    Rng rng(123);
    int agree = 0, total = 0;
    for (int i = 0; i < 20000; ++i) {
        const auto& [pa, da] = covered[size_t(rng.next_u64() % covered.size())];
        const auto& [pb, db] = covered[size_t(rng.next_u64() % covered.size())];
        const double za = s.depth.data[pa], zb = s.depth.data[pb];
        if (std::abs(za - zb) < 1e-3 || pa == pb) continue;
        ++total;
        if ((za < zb) == (da < db)) ++agree;
    }
    REQUIRE(total > 10000);
    CHECK(double(agree) / total >= 0.95);
}

// ---------------------------------------------------------------------------
// feature extractor and perceptual losses

TEST_CASE("extractor: stage shapes, determinism, embedding dimension") {
    const SeededConvExtractor fx(0);
    const ImageTensor im = random_image(41, 64, 64);
    const auto maps = fx.feature_maps(im, 4);
    REQUIRE(maps.size() == 4);
    const int want_c[4] = {24, 48, 96, 192};
    const int want_hw[4] = {32, 16, 8, 4};
    for (int i = 0; i < 4; ++i) {
        CHECK(maps[size_t(i)].c == want_c[i]);
        CHECK(maps[size_t(i)].h == want_hw[i]);
        CHECK(maps[size_t(i)].w == want_hw[i]);
        for (double v : maps[size_t(i)].data) CHECK(v >= 0.0); // abs nonlinearity
    }

    CHECK(fx.dim() == 192);
    const Eigen::VectorXd e1 = fx.embed(im);
    const Eigen::VectorXd e2 = SeededConvExtractor(0).embed(im);
    REQUIRE(e1.size() == 192);
    CHECK(e1 == e2);
    CHECK(SeededConvExtractor(1).embed(im) != e1);

    // GAP oracle: embedding = spatial mean of the stage-4 map.
    const nn::Tensor<double>& top = maps[3];
    for (int ch : {0, 60, 191}) {
        double acc = 0.0;
        for (int i = 0; i < 16; ++i) acc += top.data[size_t(ch) * 16 + i];
        CHECK(e1[ch] == doctest::Approx(acc / 16.0).epsilon(1e-12));
    }
}

TEST_CASE("content loss: identity, symmetry, recomputation") {
    const SeededConvExtractor fx(3);
    const ImageTensor a = random_image(50, 32, 32);
    const ImageTensor b = random_image(51, 32, 32);

    CHECK(content_loss(a, a, fx) == 0.0);
    CHECK(content_loss(a, b, fx) == content_loss(b, a, fx));
    CHECK(content_loss(a, b, fx) > 0.0);

    const auto ma = fx.feature_maps(a, fx.content_layer()).back();
    const auto mb = fx.feature_maps(b, fx.content_layer()).back();
    const Eigen::Map<const Eigen::VectorXd> va(ma.data.data(), long(ma.data.size()));
    const Eigen::Map<const Eigen::VectorXd> vb(mb.data.data(), long(mb.data.size()));
    CHECK(content_loss(a, b, fx) == doctest::Approx((va - vb).norm()).epsilon(1e-12));

    CHECK_THROWS_AS(content_loss(a, random_image(5, 16, 16), fx), DataError);
}

TEST_CASE("style loss: identity, symmetry, recomputation") {
    const SeededConvExtractor fx(3);
    const ImageTensor a = random_image(52, 32, 32);
    const ImageTensor b = random_image(53, 32, 32);

    CHECK(style_loss(a, a, fx) == 0.0);
    CHECK(style_loss(a, b, fx) == style_loss(b, a, fx));

    double want = 0.0;
    const auto maps_a = fx.feature_maps(a, 3);
    const auto maps_b = fx.feature_maps(b, 3);
    for (int l : fx.style_layers()) {
        const auto [mu_a, sd_a] = style_statistics(maps_a[size_t(l - 1)]);
        const auto [mu_b, sd_b] = style_statistics(maps_b[size_t(l - 1)]);
        want += (mu_a - mu_b).norm() + (sd_a - sd_b).norm();
    }
    CHECK(style_loss(a, b, fx) == doctest::Approx(want).epsilon(1e-12));

    CHECK_THROWS_AS(style_loss(a, random_image(5, 16, 16), fx), DataError);
}

TEST_CASE("style statistics: invariant under spatial permutation of features") {
    Rng rng(9);
    nn::Tensor<double> map(1, 4, 6, 5);
    for (double& v : map.data) v = rng.normal();

    nn::Tensor<double> permuted = map;
    for (int ch = 0; ch < 4; ++ch) {
        double* p = &permuted.data[size_t(ch) * 30];
        for (size_t i = 30; i > 1; --i) std::swap(p[i - 1], p[rng.next_u64() % i]);
    }

    const auto [mu_a, sd_a] = style_statistics(map);
    const auto [mu_b, sd_b] = style_statistics(permuted);
    CHECK((mu_a - mu_b).norm() < 1e-12);
    CHECK((sd_a - sd_b).norm() < 1e-12);
}

// ---------------------------------------------------------------------------
// color optimization

TEST_CASE("supervision loss: agrees with the public per-frame losses") {
    const RenderConfig cfg = RenderConfig::for_image(32, 32);
    const SeededConvExtractor fx(7);
    const GaussianCloud cloud = random_cloud(61, 30);
    const ImageTensor target = random_image(62, 32, 32);
    const ImageTensor ref = random_image(63, 32, 32);
    const double sw = 0.7;

    const double got = supervision_loss(cloud, {{target, CameraPose{}}}, {ref}, fx, cfg, sw);
    const ImageTensor rendered = render(cloud, CameraPose{}, cfg).image;
    const double want = content_loss(rendered, target, fx) + sw * style_loss(rendered, ref, fx);
    CHECK(got == doctest::Approx(want).epsilon(1e-5));
}

TEST_CASE("optimize_colors: zero steps is a no-op") {
    const RenderConfig cfg = RenderConfig::for_image(32, 32);
    const SeededConvExtractor fx(7);
    const GaussianCloud cloud = random_cloud(64, 20);
    const GaussianCloud out = optimize_colors(cloud, {{random_image(1, 32, 32), CameraPose{}}},
                                              {}, fx, cfg, 0, 0.05, 0.0);
    REQUIRE(out.gaussians.size() == cloud.gaussians.size());
    for (size_t i = 0; i < cloud.gaussians.size(); ++i)
        CHECK(out.gaussians[i].c == cloud.gaussians[i].c);
}

TEST_CASE("optimize_colors: exact stationary point holds colors fixed") {
    const RenderConfig cfg = RenderConfig::for_image(32, 32);
    const SeededConvExtractor fx(7);
    GaussianCloud cloud = random_cloud(65, 20);
    for (Gaussian3D& g : cloud.gaussians) g.c.setZero();

    // The all-zero cloud renders exactly to zero, so the rendered target
    // reproduces the tape input bit for bit and the residual is exactly 0.
    const ImageTensor target = render(cloud, CameraPose{}, cfg).image;
    const std::vector<FramePose> frames{{target, CameraPose{}}};
    CHECK(supervision_loss(cloud, frames, {}, fx, cfg, 0.0) == 0.0);

    const GaussianCloud out = optimize_colors(cloud, frames, {}, fx, cfg, 7, 0.05, 0.0);
    for (size_t i = 0; i < cloud.gaussians.size(); ++i)
        CHECK(out.gaussians[i].c == cloud.gaussians[i].c);
}

TEST_CASE("optimize_colors: only colors move, loss decreases, colors stay in range") {
    const RenderConfig cfg = RenderConfig::for_image(32, 32);
    const SeededConvExtractor fx(7);
    const GaussianCloud cloud = random_cloud(66, 30);
    const ImageTensor target = render(random_cloud(67, 30), CameraPose{}, cfg).image;
    const ImageTensor ref = random_image(68, 32, 32);
    const std::vector<FramePose> frames{{target, CameraPose{}}};

    const double before = supervision_loss(cloud, frames, {ref}, fx, cfg, 0.5);
    const GaussianCloud out = optimize_colors(cloud, frames, {ref}, fx, cfg, 10, 0.02, 0.5);
    const double after = supervision_loss(out, frames, {ref}, fx, cfg, 0.5);
    CHECK(after < before);

    for (size_t i = 0; i < cloud.gaussians.size(); ++i) {
        const Gaussian3D& in = cloud.gaussians[i];
        const Gaussian3D& gg = out.gaussians[i];
        CHECK(gg.x == in.x);
        CHECK(gg.s == in.s);
        CHECK(gg.q.coeffs() == in.q.coeffs());
        CHECK(gg.alpha == in.alpha);
        CHECK(gg.c.minCoeff() >= 0.0);
        CHECK(gg.c.maxCoeff() <= 1.0);
    }
}

TEST_CASE("optimize_colors: analytic color gradient matches finite differences") {
    const RenderConfig cfg = RenderConfig::for_image(32, 32);
    const SeededConvExtractor fx(7);
    GaussianCloud cloud = random_cloud(70, 50);
    const ImageTensor target = random_image(71, 32, 32);
    const ImageTensor ref = random_image(72, 32, 32);
    const std::vector<FramePose> frames{{target, CameraPose{}}};
    const std::vector<ImageTensor> refs{ref};
    const double sw = 0.5;

    const auto [loss, grad] = color_gradient(cloud, frames, refs, fx, cfg, sw);
    CHECK(std::isfinite(loss));
    REQUIRE(grad.rows() == 50);
    REQUIRE(grad.cols() == 3);

    const double eps = 1e-3;
    double worst = 0.0;
    for (int pick : {0, 7, 19, 33, 49})
        for (int ch = 0; ch < 3; ++ch) {
            const double saved = cloud.gaussians[size_t(pick)].c[ch];
            cloud.gaussians[size_t(pick)].c[ch] = saved + eps;
            const double up = supervision_loss(cloud, frames, refs, fx, cfg, sw);
            cloud.gaussians[size_t(pick)].c[ch] = saved - eps;
            const double dn = supervision_loss(cloud, frames, refs, fx, cfg, sw);
            cloud.gaussians[size_t(pick)].c[ch] = saved;

            const double fd = (up - dn) / (2 * eps);
            const double an = grad(pick, ch);
            const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6});
            worst = std::max(worst, rel);
            CHECK(rel < 1e-4);
        }
    MESSAGE("worst relative color-gradient error: " << worst);
}

TEST_CASE("optimize_colors: non-finite loss aborts with a diagnostic") {
    const RenderConfig cfg = RenderConfig::for_image(32, 32);
    const SeededConvExtractor fx(7);
    const GaussianCloud cloud = random_cloud(73, 10);
    const ImageTensor target = random_image(74, 32, 32);
    const ImageTensor ref = random_image(75, 32, 32);
    // A style weight at the top of the double range overflows the total.
    CHECK_THROWS_WITH_AS(optimize_colors(cloud, {{target, CameraPose{}}}, {ref}, fx, cfg, 2,
                                         0.05, 1e308),
                         doctest::Contains("non-finite"), NumericError);
}

TEST_CASE("optimize_colors: input validation") {
    const RenderConfig cfg = RenderConfig::for_image(32, 32);
    const SeededConvExtractor fx(7);
    const GaussianCloud cloud = random_cloud(76, 5);
    const ImageTensor target = random_image(77, 32, 32);
    CHECK_THROWS_AS(optimize_colors(cloud, {}, {}, fx, cfg, 1, 0.05, 0.0), DataError);
    // style weight without matching references
    CHECK_THROWS_AS(optimize_colors(cloud, {{target, CameraPose{}}}, {}, fx, cfg, 1, 0.05, 1.0),
                    DataError);
    CHECK_THROWS_AS(optimize_colors(cloud, {{target, CameraPose{}}}, {}, fx, cfg, -1, 0.05, 0.0),
                    DataError);
}

// ---------------------------------------------------------------------------
// cloud files

TEST_CASE("cloud file: round trip preserves float-quantized fields") {
    const fs::path dir = scratch_dir("gspc");
    GaussianCloud cloud = random_cloud(80, 17);
    cloud.gaussians[3].q = random_unit_quaternion(81);

    const fs::path path = dir / "cloud.gspc";
    write_cloud(path.string(), cloud);
    const GaussianCloud back = read_cloud(path.string());

    REQUIRE(back.gaussians.size() == cloud.gaussians.size());
    for (size_t i = 0; i < cloud.gaussians.size(); ++i) {
        const Gaussian3D& a = cloud.gaussians[i];
        const Gaussian3D& b = back.gaussians[i];
        for (int j = 0; j < 3; ++j) {
            CHECK(b.x[j] == double(float(a.x[j])));
            CHECK(b.s[j] == double(float(a.s[j])));
        }
        CHECK(b.q.w() == double(float(a.q.w())));
        CHECK(b.q.x() == double(float(a.q.x())));
        CHECK(b.alpha == double(float(a.alpha)));
        for (int j = 0; j < 3; ++j) CHECK(b.c[j] == double(float(a.c[j])));
    }
    CHECK_NOTHROW(back.validate());

    // A second write of the reread cloud is byte-identical (all fields are
    // already on the f32 grid).
    const fs::path path2 = dir / "cloud2.gspc";
    write_cloud(path2.string(), back);
    CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("cloud file: rejects foreign and truncated files") {
    const fs::path dir = scratch_dir("gspc_bad");
    {
        std::ofstream out(dir / "not_a_cloud.gspc", std::ios::binary);
        out << "PNG\x89 definitely not a gaussian cloud";
    }
    CHECK_THROWS_WITH_AS(read_cloud((dir / "not_a_cloud.gspc").string()),
                         doctest::Contains("bad magic"), DataError);
    CHECK_THROWS_AS(read_cloud((dir / "missing.gspc").string()), DataError);

    write_cloud((dir / "ok.gspc").string(), random_cloud(82, 3));
    std::string bytes = slurp(dir / "ok.gspc");
    {
        std::ofstream out(dir / "cut.gspc", std::ios::binary);
        out.write(bytes.data(), std::streamsize(bytes.size() / 2));
    }
    CHECK_THROWS_AS(read_cloud((dir / "cut.gspc").string()), DataError);
}

// ---------------------------------------------------------------------------
// pseudo-label pipeline

TEST_CASE("generate_pseudo_labels: writes deterministic per-frame images") {
    const fs::path root = scratch_dir("pseudo_ds");
    const img::LumenDataset ds = img::generate_lumen_dataset(3, 8, 32);
    for (const auto& s : ds.samples) img::write_sample(root.string(), s);

    const fs::path corrupted = root / "corrupted";
    fs::create_directories(corrupted);
    for (const auto& s : ds.samples)
        img::write_png((corrupted / (img::frame_name(s.frame_id) + ".png")).string(),
                       s.real_image);

    PseudoConfig cfg;
    cfg.window = 4;
    cfg.init_stride = 8;
    cfg.supervision_views = 2;
    cfg.steps = 2;

    std::vector<int> ids(8);
    std::iota(ids.begin(), ids.end(), 0);
    generate_pseudo_labels(root.string(), corrupted.string(), ids, cfg);

    std::vector<std::string> first_run;
    for (int id : ids) {
        const fs::path p = root / "pseudo" / (img::frame_name(id) + ".png");
        REQUIRE(fs::exists(p));
        const ImageTensor im = img::read_png(p.string());
        CHECK(im.height == 32);
        CHECK(im.width == 32);
        CHECK(im.finite_in_unit_range());
        first_run.push_back(slurp(p));
    }

    generate_pseudo_labels(root.string(), corrupted.string(), ids, cfg);
    for (int id : ids)
        CHECK(slurp(root / "pseudo" / (img::frame_name(id) + ".png")) == first_run[size_t(id)]);
}
