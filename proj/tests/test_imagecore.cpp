#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "arit/common/rng.hpp"
#include "arit/imagecore/dataset.hpp"
#include "arit/imagecore/image_io.hpp"
#include "arit/imagecore/lumen.hpp"
#include "arit/imagecore/manifest.hpp"

using namespace arit;
using namespace arit::img;
namespace fs = std::filesystem;

namespace {

fs::path test_dir() {
    fs::path p = fs::temp_directory_path() / "arit_test_imagecore";
    fs::create_directories(p);
    return p;
}

std::vector<char> slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("png round trip: all-zeros image is identity") {
    ImageTensor im(8, 8, 3, 0.0f);
    auto path = (test_dir() / "zeros.png").string();
    write_png(path, im);
    ImageTensor back = read_png(path);
    REQUIRE(back.same_shape(im));
    for (size_t i = 0; i < im.size(); ++i) CHECK(back.data[i] == 0.0f);
}

TEST_CASE("png round trip: already-quantized values come back exact") {
    ImageTensor im(8, 8, 3);
    for (size_t i = 0; i < im.size(); ++i)
        im.data[i] = (i % 3 == 0) ? 0.0f : (i % 3 == 1) ? 128.0f / 255.0f : 1.0f;
    auto path = (test_dir() / "quantized.png").string();
    write_png(path, im);
    ImageTensor back = read_png(path);
    for (size_t i = 0; i < im.size(); ++i) CHECK(back.data[i] == im.data[i]);
}

TEST_CASE("png write-read-write produces byte-identical files") {
    Rng rng(42);
    ImageTensor im(16, 16, 3);
    for (float& v : im.data) v = float(rng.uniform());
    auto p1 = test_dir() / "rt1.png";
    auto p2 = test_dir() / "rt2.png";
    write_png(p1.string(), im);
    ImageTensor back = read_png(p1.string());
    write_png(p2.string(), back);
    CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("png quantization error bounded by 1/510 per channel") {
    Rng rng(7);
    ImageTensor im(12, 12, 1);
    for (float& v : im.data) v = float(rng.uniform());
    auto path = (test_dir() / "quant.png").string();
    write_png(path, im);
    ImageTensor back = read_png(path);
    for (size_t i = 0; i < im.size(); ++i)
        CHECK(std::abs(back.data[i] - im.data[i]) <= 1.0f / 510.0f + 1e-7f);
}

TEST_CASE("grayscale png round trip") {
    ImageTensor im(8, 10, 1);
    for (size_t i = 0; i < im.size(); ++i) im.data[i] = quantize8(float(i) / float(im.size()));
    auto path = (test_dir() / "gray.png").string();
    write_png(path, im);
    ImageTensor back = read_png(path);
    REQUIRE(back.channels == 1);
    REQUIRE(back.width == 10);
    for (size_t i = 0; i < im.size(); ++i) CHECK(back.data[i] == im.data[i]);
}

TEST_CASE("png read rejects missing file") {
    CHECK_THROWS_AS(read_png((test_dir() / "no_such.png").string()), DataError);
}

TEST_CASE("pfm round trip preserves floats exactly") {
    FloatMap m(9, 11);
    Rng rng(3);
    for (float& v : m.data) v = float(rng.uniform(0.001, 500.0));
    m.at(0, 0) = 123.456f;
    auto path = (test_dir() / "depth.pfm").string();
    write_pfm(path, m);
    FloatMap back = read_pfm(path);
    REQUIRE(back.height == 9);
    REQUIRE(back.width == 11);
    for (size_t i = 0; i < m.data.size(); ++i) CHECK(back.data[i] == m.data[i]);
}

TEST_CASE("pose json round trip") {
    CameraPose p = look_along(Eigen::Vector3d(1.5, -2.0, 30.0), Eigen::Vector3d(0.1, 0.2, 1.0));
    auto path = (test_dir() / "pose.json").string();
    write_pose(path, p);
    CameraPose back = read_pose(path);
    CHECK((back.position - p.position).norm() < 1e-12);
    CHECK(std::abs(std::abs(back.orientation.dot(p.orientation)) - 1.0) < 1e-12);
}

TEST_CASE("pose with non-unit quaternion rejected") {
    auto path = (test_dir() / "bad_pose.json").string();
    std::ofstream(path) << R"({"position":[0,0,0],"quaternion":[1.0,0.5,0,0]})";
    CHECK_THROWS_AS(read_pose(path), DataError);
}

TEST_CASE("image tensor shape contract") {
    CHECK_THROWS_AS(ImageTensor(4, 8, 3), DataError);
    CHECK_THROWS_AS(ImageTensor(8, 8, 2), DataError);
}

TEST_CASE("manifest round trip preserves all fields") {
    DatasetManifest m;
    m.root_path = "some/dir";
    m.train = {0, 1, 2, 5};
    m.val = {3};
    m.test = {4, 6};
    m.resolution = 96;
    m.seed = 0xdeadbeefULL;
    m.generator_params = {{"radius", "10.5"}, {"amp_x", "0"}};
    auto path = (test_dir() / "manifest.json").string();
    write_manifest(path, m);
    DatasetManifest back = read_manifest(path);
    CHECK(back.root_path == m.root_path);
    CHECK(back.train == m.train);
    CHECK(back.val == m.val);
    CHECK(back.test == m.test);
    CHECK(back.resolution == m.resolution);
    CHECK(back.seed == m.seed);
    CHECK(back.generator_params == m.generator_params);
}

TEST_CASE("manifest with a frame in two splits is rejected") {
    DatasetManifest m;
    m.train = {1, 2, 3};
    m.test = {3, 4};
    CHECK_THROWS_AS(m.validate(), DataError);

    auto path = (test_dir() / "overlap.json").string();
    std::ofstream(path) << R"({"splits":{"train":[1,2,3],"test":[3,4]}})";
    CHECK_THROWS_AS(read_manifest(path), DataError);
}

TEST_CASE("minimal hand-written manifest gets documented defaults") {
    auto path = (test_dir() / "minimal.json").string();
    std::ofstream(path) << R"({"splits":{"train":[0,1,2]}})";
    DatasetManifest m = read_manifest(path);
    CHECK(m.root_path == ".");
    CHECK(m.resolution == 64);
    CHECK(m.seed == 0);
    CHECK(m.generator_params.empty());
    CHECK(m.train == std::vector<int>{0, 1, 2});
    CHECK(m.val.empty());
    CHECK(m.test.empty());
}

TEST_CASE("manifest frames list must match split union") {
    auto path = (test_dir() / "frames_bad.json").string();
    std::ofstream(path) << R"({"splits":{"train":[0,1]},"frames":[0,1,2]})";
    CHECK_THROWS_AS(read_manifest(path), DataError);

    auto ok_path = (test_dir() / "frames_ok.json").string();
    std::ofstream(ok_path) << R"({"splits":{"train":[1,0],"val":[2]},"frames":[0,1,2]})";
    CHECK(read_manifest(ok_path).all_frames() == std::vector<int>{0, 1, 2});
}

TEST_CASE("lumen dataset: cardinality, shape, positive depth") {
    LumenDataset d = generate_lumen_dataset(1, 5, 64);
    REQUIRE(d.samples.size() == 5);
    for (const auto& s : d.samples) {
        CHECK(s.virtual_image.height == 64);
        CHECK(s.virtual_image.width == 64);
        CHECK(s.virtual_image.channels == 3);
        CHECK(s.real_image.same_shape(s.virtual_image));
        CHECK(s.virtual_image.finite_in_unit_range());
        CHECK(s.real_image.finite_in_unit_range());
        for (float v : s.depth.data) CHECK(v > 0.0f);
    }
    CHECK(d.manifest.all_frames() == std::vector<int>{0, 1, 2, 3, 4});
}

TEST_CASE("lumen dataset is a pure function of its arguments") {
    LumenDataset a = generate_lumen_dataset(9, 3, 64);
    LumenDataset b = generate_lumen_dataset(9, 3, 64);
    for (int i = 0; i < 3; ++i) {
        CHECK(a.samples[i].virtual_image.data == b.samples[i].virtual_image.data);
        CHECK(a.samples[i].real_image.data == b.samples[i].real_image.data);
        CHECK(a.samples[i].depth.data == b.samples[i].depth.data);
        CHECK(a.samples[i].pose.position == b.samples[i].pose.position);
    }
}

TEST_CASE("different seeds change frame 0") {
    SceneSample a = render_lumen_frame(1, 0, 64, LumenParams{});
    SceneSample b = render_lumen_frame(2, 0, 64, LumenParams{});
    // direct comparison: at least one real-image pixel must differ
    CHECK(a.real_image.data != b.real_image.data);
}

TEST_CASE("straight tube: center depth >= wall boundary depth") {
    SceneSample s = render_lumen_frame(5, 0, 64, LumenParams{}.straight());
    const int c = 32;
    float center = s.depth.at(c, c);
    for (auto [y, x] : {std::pair{0, c}, {63, c}, {c, 0}, {c, 63}, {0, 0}, {63, 63}}) {
        CHECK(center >= s.depth.at(y, x));
    }
}

TEST_CASE("dataset directory round trip") {
    LumenDataset d = generate_lumen_dataset(4, 2, 64);
    auto root = (test_dir() / "ds").string();
    for (const auto& s : d.samples) write_sample(root, s);
    d.manifest.root_path = root;
    write_manifest(root + "/manifest.json", d.manifest);

    SceneSample back = read_sample(root, 1);
    CHECK(back.frame_id == 1);
    // images were quantized on write; re-quantizing the originals must match
    for (size_t i = 0; i < back.real_image.size(); ++i)
        CHECK(back.real_image.data[i] == quantize8(d.samples[1].real_image.data[i]));
    for (size_t i = 0; i < back.depth.data.size(); ++i)
        CHECK(back.depth.data[i] == d.samples[1].depth.data[i]);
    CHECK((back.pose.position - d.samples[1].pose.position).norm() < 1e-12);
}

TEST_CASE("lumen generator params round trip through string map") {
    LumenParams p;
    p.radius = 9.25;
    p.amp_x = 0.0;
    LumenParams q = LumenParams::from_map(p.to_map());
    CHECK(q.radius == p.radius);
    CHECK(q.amp_x == p.amp_x);
    CHECK(q.freq_y == p.freq_y);
    CHECK_THROWS_AS(LumenParams::from_map({{"bogus", "1"}}), ConfigError);
    CHECK_THROWS_AS(LumenParams::from_map({{"radius", "abc"}}), ConfigError);
}
