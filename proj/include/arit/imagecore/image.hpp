#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "arit/common/error.hpp"

namespace arit::img {

// H x W x C float image, values in [0,1], row-major with interleaved channels.
// The universal currency of the pipeline.
struct ImageTensor {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> data;

    ImageTensor() = default;
    ImageTensor(int h, int w, int c, float fill = 0.0f)
        : height(h), width(w), channels(c), data(size_t(h) * w * c, fill) {
        check_shape();
    }

    void check_shape() const {
        if (height < 8 || width < 8)
            throw DataError("ImageTensor: height and width must be >= 8");
        if (channels != 1 && channels != 3)
            throw DataError("ImageTensor: channels must be 1 or 3");
    }

    size_t size() const { return data.size(); }

    float& at(int y, int x, int c) { return data[(size_t(y) * width + x) * channels + c]; }
    float at(int y, int x, int c) const { return data[(size_t(y) * width + x) * channels + c]; }

    // Edge-replicated access, the boundary mode used by all blur kernels.
    float at_clamped(int y, int x, int c) const {
        y = std::clamp(y, 0, height - 1);
        x = std::clamp(x, 0, width - 1);
        return at(y, x, c);
    }

    bool same_shape(const ImageTensor& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }

    void clip01() {
        for (float& v : data) v = std::clamp(v, 0.0f, 1.0f);
    }

    bool finite_in_unit_range() const {
        for (float v : data)
            if (!std::isfinite(v) || v < 0.0f || v > 1.0f) return false;
        return true;
    }

    float mean() const {
        double s = 0.0;
        for (float v : data) s += v;
        return data.empty() ? 0.0f : float(s / double(data.size()));
    }
};

inline ImageTensor to_gray(const ImageTensor& im) {
    if (im.channels == 1) return im;
    ImageTensor g(im.height, im.width, 1);
    for (int y = 0; y < im.height; ++y)
        for (int x = 0; x < im.width; ++x)
            g.at(y, x, 0) =
                0.299f * im.at(y, x, 0) + 0.587f * im.at(y, x, 1) + 0.114f * im.at(y, x, 2);
    return g;
}

// H x W float map (depth in millimeters, feature planes, ...).
struct FloatMap {
    int height = 0;
    int width = 0;
    std::vector<float> data;

    FloatMap() = default;
    FloatMap(int h, int w, float fill = 0.0f) : height(h), width(w), data(size_t(h) * w, fill) {}

    float& at(int y, int x) { return data[size_t(y) * width + x]; }
    float at(int y, int x) const { return data[size_t(y) * width + x]; }
};

inline float quantize8(float v) { return std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f) / 255.0f; }

} // namespace arit::img
