#include "arit/imagecore/dataset.hpp"

#include <cstdio>
#include <filesystem>

#include "arit/imagecore/image_io.hpp"

namespace fs = std::filesystem;

namespace arit::img {

void SceneSample::validate() const {
    virtual_image.check_shape();
    real_image.check_shape();
    if (!virtual_image.same_shape(real_image) || virtual_image.height != depth.height ||
        virtual_image.width != depth.width)
        throw DataError("scene sample: virtual/real/depth dimensions disagree");
    for (float d : depth.data)
        if (!(d > 0.0f)) throw DataError("scene sample: non-positive depth value");
    pose.validate();
}

std::string frame_name(int frame_id) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%06d", frame_id);
    return buf;
}

void write_sample(const std::string& root, const SceneSample& sample) {
    sample.validate();
    const std::string name = frame_name(sample.frame_id);
    for (const char* sub : {"virtual", "real", "depth", "pose"})
        fs::create_directories(fs::path(root) / sub);
    write_png((fs::path(root) / "virtual" / (name + ".png")).string(), sample.virtual_image);
    write_png((fs::path(root) / "real" / (name + ".png")).string(), sample.real_image);
    write_pfm((fs::path(root) / "depth" / (name + ".pfm")).string(), sample.depth);
    write_pose((fs::path(root) / "pose" / (name + ".json")).string(), sample.pose);
}

SceneSample read_sample(const std::string& root, int frame_id) {
    const std::string name = frame_name(frame_id);
    SceneSample s;
    s.frame_id = frame_id;
    s.virtual_image = read_png((fs::path(root) / "virtual" / (name + ".png")).string());
    s.real_image = read_png((fs::path(root) / "real" / (name + ".png")).string());
    s.depth = read_pfm((fs::path(root) / "depth" / (name + ".pfm")).string());
    s.pose = read_pose((fs::path(root) / "pose" / (name + ".json")).string());
    s.validate();
    return s;
}

ImageTensor read_frame_image(const std::string& root, const std::string& kind, int frame_id) {
    return read_png((fs::path(root) / kind / (frame_name(frame_id) + ".png")).string());
}

} // namespace arit::img
