#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "arit/imagecore/dataset.hpp"

namespace arit::img {

// Geometry and appearance knobs of the procedural tube scene. Units are
// millimeters; the camera travels along the (possibly perturbed) centerline.
// Setting the three amplitude fields to 0 gives the canonical straight tube.
struct LumenParams {
    double radius = 12.0;      // nominal tube radius
    double radius_amp = 0.15;  // relative radius modulation amplitude
    double radius_freq = 0.05; // rad/mm
    double amp_x = 3.0;        // centerline sway amplitudes
    double amp_y = 2.5;
    double freq_x = 0.08; // rad/mm
    double freq_y = 0.06;
    double dz = 2.0;        // camera advance per frame
    double far_clip = 300.0; // depth assigned to rays that escape down the tube
    double gain_min = 0.6;  // per-frame illumination jitter range (real domain)
    double gain_max = 1.4;

    static LumenParams from_map(const std::map<std::string, std::string>& kv);
    std::map<std::string, std::string> to_map() const;

    LumenParams straight() const {
        LumenParams p = *this;
        p.amp_x = p.amp_y = p.radius_amp = 0.0;
        return p;
    }
};

struct LumenDataset {
    std::vector<SceneSample> samples;
    DatasetManifest manifest;
};

// Renders one frame. Pure function of its arguments; bit-identical on repeat.
SceneSample render_lumen_frame(std::uint64_t seed, int frame_id, int resolution,
                               const LumenParams& params);

// Renders n_frames frames (parallel over frames, deterministic) and assembles
// a manifest with contiguous train/val/test splits in ratio 5:1:1.
LumenDataset generate_lumen_dataset(std::uint64_t seed, int n_frames, int resolution,
                                    const LumenParams& params = {});

} // namespace arit::img
