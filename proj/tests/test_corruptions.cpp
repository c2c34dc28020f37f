#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "arit/common/rng.hpp"
#include "arit/corruption/corruption.hpp"
#include "arit/imagecore/lumen.hpp"

using namespace arit;
using namespace arit::corr;
using img::ImageTensor;

namespace {

ImageTensor random_image(uint64_t seed, int h = 32, int w = 32) {
    Rng rng(seed);
    ImageTensor im(h, w, 3);
    for (float& v : im.data) v = float(rng.uniform());
    return im;
}

// Linear ramp: symmetric kernels and centered zoom resampling both preserve
// its mean over any interior box that is symmetric about the image center.
ImageTensor ramp_image(int n = 64) {
    ImageTensor im(n, n, 3);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            for (int c = 0; c < 3; ++c)
                im.at(y, x, c) = 0.2f + 0.5f * float(x) / float(n - 1) +
                                 0.1f * float(y) / float(n - 1);
    return im;
}

double interior_mean(const ImageTensor& im, int margin) {
    double s = 0.0;
    int n = 0;
    for (int y = margin; y < im.height - margin; ++y)
        for (int x = margin; x < im.width - margin; ++x)
            for (int c = 0; c < im.channels; ++c) {
                s += im.at(y, x, c);
                ++n;
            }
    return s / n;
}

} // namespace

TEST_CASE("intensity zero is the exact identity for every kind") {
    ImageTensor im = random_image(11);
    for (int k = 0; k < kNumKinds; ++k) {
        CorruptionSpec spec{CorruptionKind(k), 4, 0.0, 0.9};
        ImageTensor out = apply_corruption(im, spec, 77);
        CHECK(out.data == im.data);
    }
}

TEST_CASE("contrast fixes a constant mid-gray image") {
    ImageTensor im(16, 16, 3, 0.5f);
    for (double intensity : {0.3, 1.0}) {
        CorruptionSpec spec{CorruptionKind::contrast, 5, intensity, 0.0};
        ImageTensor out = apply_corruption(im, spec, 1);
        CHECK(out.data == im.data);
    }
}

TEST_CASE("gaussian noise sigma matches the severity table within 10%") {
    ImageTensor im(64, 64, 3, 0.5f);
    CorruptionSpec spec{CorruptionKind::gaussian_noise, 3, 1.0, 0.0};
    ImageTensor out = apply_corruption(im, spec, 123);
    REQUIRE(out.size() >= 4096);
    double sum = 0.0, sum2 = 0.0;
    for (size_t i = 0; i < out.size(); ++i) {
        double d = out.data[i] - im.data[i];
        sum += d;
        sum2 += d * d;
    }
    double n = double(out.size());
    double var = (sum2 - sum * sum / n) / (n - 1);
    double sd = std::sqrt(var);
    CHECK(sd == doctest::Approx(0.08).epsilon(0.10));
}

TEST_CASE("gaussian noise mean absolute deviation ~ sigma*sqrt(2/pi)") {
    ImageTensor im(64, 64, 3, 0.5f);
    CorruptionSpec spec{CorruptionKind::gaussian_noise, 5, 1.0, 0.0};
    ImageTensor out = apply_corruption(im, spec, 9);
    double mad = 0.0;
    for (size_t i = 0; i < out.size(); ++i) mad += std::abs(out.data[i] - im.data[i]);
    mad /= double(out.size());
    CHECK(mad == doctest::Approx(0.14 * std::sqrt(2.0 / M_PI)).epsilon(0.10));
}

TEST_CASE("darkness is monotone and never brightens") {
    ImageTensor im = random_image(5);
    CorruptionSpec spec{CorruptionKind::darkness, 3, 0.8, 0.0};
    ImageTensor out = apply_corruption(im, spec, 1);
    for (size_t i = 0; i < im.size(); ++i) CHECK(out.data[i] <= im.data[i]);
    // monotone: pixel order preserved
    for (size_t i = 1; i < im.size(); ++i)
        if (im.data[i] > im.data[i - 1]) CHECK(out.data[i] >= out.data[i - 1]);
}

TEST_CASE("contrast is monotone per pixel") {
    ImageTensor im = random_image(6);
    CorruptionSpec spec{CorruptionKind::contrast, 4, 1.0, 0.0};
    ImageTensor out = apply_corruption(im, spec, 1);
    for (size_t i = 1; i < im.size(); ++i)
        if (im.data[i] > im.data[i - 1]) CHECK(out.data[i] >= out.data[i - 1]);
}

TEST_CASE("blur corruptions preserve interior mean within 1e-3") {
    ImageTensor im = ramp_image();
    for (auto [kind, margin] : {std::pair{CorruptionKind::defocus_blur, 10},
                                {CorruptionKind::motion_blur, 10},
                                {CorruptionKind::zoom_blur, 16}}) {
        CorruptionSpec spec{kind, 3, 1.0, 0.7};
        ImageTensor out = apply_corruption(im, spec, 2);
        CHECK(std::abs(interior_mean(out, margin) - interior_mean(im, margin)) < 1e-3);
    }
}

TEST_CASE("fog never falls below the (1-t) floor") {
    ImageTensor im = random_image(8);
    CorruptionSpec spec{CorruptionKind::fog, 5, 1.0, 0.0};
    ImageTensor out = apply_corruption(im, spec, 31);
    const double t = 0.6; // severity-5 blend at full intensity
    for (size_t i = 0; i < im.size(); ++i)
        CHECK(out.data[i] >= float((1.0 - t) * im.data[i]) - 1e-6f);
}

TEST_CASE("corruptions are pure functions of (image, spec, seed)") {
    ImageTensor im = random_image(21);
    for (int k = 0; k < kNumKinds; ++k) {
        CorruptionSpec spec{CorruptionKind(k), 2, 0.9, 1.1};
        ImageTensor a = apply_corruption(im, spec, 555);
        ImageTensor b = apply_corruption(im, spec, 555);
        CHECK(a.data == b.data);
    }
}

TEST_CASE("policy sampling yields two distinct kinds, deterministically") {
    CorruptionPolicy pol;
    pol.seed = 42;
    for (int f = 0; f < 200; ++f) {
        auto [a, b] = sample_policy(pol, f);
        CHECK(a.kind != b.kind);
        CHECK(a.severity >= 1);
        CHECK(a.severity <= 5);
        CHECK(a.intensity >= 0.5);
        CHECK(a.intensity <= 1.0);
        auto [a2, b2] = sample_policy(pol, f);
        CHECK(a.kind == a2.kind);
        CHECK(a.severity == a2.severity);
        CHECK(a.intensity == a2.intensity);
        CHECK(b.angle == b2.angle);
    }
}

TEST_CASE("kind frequencies over 7000 draws are uniform within 3 sigma") {
    CorruptionPolicy pol;
    pol.seed = 7;
    int counts[kNumKinds] = {0};
    const int draws = 7000;
    for (int f = 0; f < draws; ++f) {
        auto [a, b] = sample_policy(pol, f);
        ++counts[int(a.kind)];
        ++counts[int(b.kind)];
    }
    // each kind appears in a draw with probability 2/7
    double expectation = draws * 2.0 / 7.0;
    double sigma = std::sqrt(draws * (2.0 / 7.0) * (5.0 / 7.0));
    for (int k = 0; k < kNumKinds; ++k)
        CHECK(std::abs(counts[k] - expectation) <= 3.0 * sigma);
}

TEST_CASE("empty severity range is rejected") {
    CorruptionPolicy pol;
    pol.severity_lo = 4;
    pol.severity_hi = 2;
    CHECK_THROWS_AS(sample_policy(pol, 0), ConfigError);
}

TEST_CASE("benchmark: cardinality, identity hook, reproducibility") {
    img::LumenDataset d = img::generate_lumen_dataset(3, 5, 64);
    CorruptionPolicy pol;
    pol.seed = 99;

    BenchmarkResult r1 = build_benchmark(d.samples, pol);
    CHECK(r1.samples.size() == 5);
    CHECK(r1.log.size() == 5);
    for (const auto& rec : r1.log) CHECK(rec.specs[0].kind != rec.specs[1].kind);
    for (size_t i = 0; i < 5; ++i) {
        CHECK(r1.samples[i].virtual_image.data == d.samples[i].virtual_image.data);
        CHECK(r1.samples[i].depth.data == d.samples[i].depth.data);
    }

    BenchmarkResult r2 = build_benchmark(d.samples, pol);
    for (size_t i = 0; i < 5; ++i) CHECK(r1.samples[i].real_image.data == r2.samples[i].real_image.data);

    CorruptionPolicy zero = pol;
    zero.force_zero_intensity = true;
    BenchmarkResult rz = build_benchmark(d.samples, zero);
    for (size_t i = 0; i < 5; ++i) CHECK(rz.samples[i].real_image.data == d.samples[i].real_image.data);
}

TEST_CASE("spec log round trip") {
    img::LumenDataset d = img::generate_lumen_dataset(3, 3, 64);
    CorruptionPolicy pol;
    pol.seed = 10;
    BenchmarkResult r = build_benchmark(d.samples, pol);
    auto path =
        (std::filesystem::temp_directory_path() / "arit_test_corr" / "log.jsonl").string();
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    write_spec_log(path, r.log);
    auto back = read_spec_log(path);
    REQUIRE(back.size() == r.log.size());
    for (size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].frame_id == r.log[i].frame_id);
        for (int j = 0; j < 2; ++j) {
            CHECK(back[i].specs[j].kind == r.log[i].specs[j].kind);
            CHECK(back[i].specs[j].severity == r.log[i].specs[j].severity);
            CHECK(back[i].specs[j].intensity == r.log[i].specs[j].intensity);
            CHECK(back[i].seeds[j] == r.log[i].seeds[j]);
        }
    }
}

TEST_CASE("kind names round trip") {
    for (int k = 0; k < kNumKinds; ++k)
        CHECK(kind_from_name(kind_name(CorruptionKind(k))) == CorruptionKind(k));
    CHECK_THROWS_AS(kind_from_name("sparkle"), ConfigError);
}
