#pragma once

#include <string>

#include "arit/imagecore/image.hpp"
#include "arit/imagecore/pose.hpp"

namespace arit::img {

// 8-bit PNG, grayscale or RGB. Write quantizes v -> round(v*255); read maps
// b -> b/255, so write-then-read is the identity on already-quantized images.
ImageTensor read_png(const std::string& path);
void write_png(const std::string& path, const ImageTensor& image);

// PFM "Pf" grayscale, 32-bit little-endian floats, rows bottom-to-top.
// Used for depth so that values are never quantized.
FloatMap read_pfm(const std::string& path);
void write_pfm(const std::string& path, const FloatMap& map);

// {"position":[x,y,z],"quaternion":[w,x,y,z]}
CameraPose read_pose(const std::string& path);
void write_pose(const std::string& path, const CameraPose& pose);

} // namespace arit::img
