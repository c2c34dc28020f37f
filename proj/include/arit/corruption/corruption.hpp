#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "arit/imagecore/dataset.hpp"
#include "arit/imagecore/image.hpp"

namespace arit::corr {

enum class CorruptionKind : int {
    darkness = 0,
    zoom_blur = 1,
    defocus_blur = 2,
    contrast = 3,
    motion_blur = 4,
    fog = 5,
    gaussian_noise = 6,
};
inline constexpr int kNumKinds = 7;

const char* kind_name(CorruptionKind kind);
CorruptionKind kind_from_name(const std::string& name);

struct CorruptionSpec {
    CorruptionKind kind = CorruptionKind::gaussian_noise;
    int severity = 1;        // 1..5, indexes the severity tables
    double intensity = 1.0;  // [0,1]; linearly interpolates identity -> table value
    double angle = 0.0;      // radians; motion blur only

    void validate() const;
};

struct CorruptionPolicy {
    int severity_lo = 1;
    int severity_hi = 5;
    std::uint64_t seed = 0;
    // Test hook: force both sampled intensities to 0 so the corrupted set must
    // equal the input set bit for bit.
    bool force_zero_intensity = false;
};

// Applies one corruption. Pure function of (image, spec, seed); intensity 0
// returns the input unchanged for every kind.
img::ImageTensor apply_corruption(const img::ImageTensor& image, const CorruptionSpec& spec,
                                  std::uint64_t seed);

// Draws two specs with distinct kinds, severities uniform in the policy range,
// intensities uniform in [0.5, 1.0]. Deterministic given (policy.seed, frame_id).
std::pair<CorruptionSpec, CorruptionSpec> sample_policy(const CorruptionPolicy& policy,
                                                        int frame_id);

// Seed fed to apply_corruption for one kind on one frame.
std::uint64_t frame_seed(const CorruptionPolicy& policy, int frame_id, CorruptionKind kind);

struct FrameCorruptionRecord {
    int frame_id = 0;
    CorruptionSpec specs[2];
    std::uint64_t seeds[2] = {0, 0};
};

struct BenchmarkResult {
    std::vector<img::SceneSample> samples;
    std::vector<FrameCorruptionRecord> log;
};

// Replaces each real_image with the two sampled corruptions applied in order;
// virtual image, depth and pose pass through untouched.
BenchmarkResult build_benchmark(const std::vector<img::SceneSample>& dataset,
                                const CorruptionPolicy& policy);

// JSON-lines spec log, one object per frame.
void write_spec_log(const std::string& path, const std::vector<FrameCorruptionRecord>& log);
std::vector<FrameCorruptionRecord> read_spec_log(const std::string& path);

} // namespace arit::corr
