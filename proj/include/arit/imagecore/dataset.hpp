#pragma once

#include <string>
#include <vector>

#include "arit/imagecore/image.hpp"
#include "arit/imagecore/manifest.hpp"
#include "arit/imagecore/pose.hpp"

namespace arit::img {

// One paired frame: virtual + real renderings of the same geometry, exact
// depth, and the true camera pose.
struct SceneSample {
    ImageTensor virtual_image;
    ImageTensor real_image;
    FloatMap depth; // millimeters, all > 0
    CameraPose pose;
    int frame_id = 0;

    void validate() const;
};

// Disk layout under a dataset root:
//   root/virtual/frame_%06d.png
//   root/real/frame_%06d.png
//   root/depth/frame_%06d.pfm
//   root/pose/frame_%06d.json
std::string frame_name(int frame_id);

void write_sample(const std::string& root, const SceneSample& sample);
SceneSample read_sample(const std::string& root, int frame_id);

// Convenience for modules that only need one stream of a dataset.
ImageTensor read_frame_image(const std::string& root, const std::string& kind, int frame_id);

} // namespace arit::img
