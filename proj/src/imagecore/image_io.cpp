#include "arit/imagecore/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include <json.hpp>

namespace arit::img {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
    (void)png;
    throw DataError(std::string("png: ") + msg);
}

void png_warn_fn(png_structp, png_const_charp) {}

} // namespace

ImageTensor read_png(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw DataError("cannot open PNG for reading: " + path);

    png_byte header[8];
    if (std::fread(header, 1, 8, f.get()) != 8 || png_sig_cmp(header, 0, 8))
        throw DataError("not a PNG file: " + path);

    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warn_fn);
    png_infop info = png_create_info_struct(png);
    try {
        png_init_io(png, f.get());
        png_set_sig_bytes(png, 8);
        png_read_info(png, info);

        int bit_depth = png_get_bit_depth(png, info);
        int color_type = png_get_color_type(png, info);
        if (bit_depth != 8)
            throw DataError("unsupported PNG bit depth (expected 8): " + path);
        if (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB)
            throw DataError("unsupported PNG color type (expected gray or RGB): " + path);

        int w = int(png_get_image_width(png, info));
        int h = int(png_get_image_height(png, info));
        int c = color_type == PNG_COLOR_TYPE_GRAY ? 1 : 3;

        ImageTensor im(h, w, c);
        std::vector<png_byte> row(size_t(w) * c);
        for (int y = 0; y < h; ++y) {
            png_read_row(png, row.data(), nullptr);
            for (size_t i = 0; i < row.size(); ++i)
                im.data[size_t(y) * w * c + i] = float(row[i]) / 255.0f;
        }
        png_read_end(png, nullptr);
        png_destroy_read_struct(&png, &info, nullptr);
        return im;
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
}

void write_png(const std::string& path, const ImageTensor& image) {
    image.check_shape();
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw DataError("cannot open PNG for writing: " + path);

    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warn_fn);
    png_infop info = png_create_info_struct(png);
    try {
        png_init_io(png, f.get());
        // Fixed settings keep byte-identical files for identical pixels.
        png_set_compression_level(png, 6);
        png_set_filter(png, 0, PNG_FILTER_NONE);
        png_set_IHDR(png, info, image.width, image.height, 8,
                     image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);

        std::vector<png_byte> row(size_t(image.width) * image.channels);
        for (int y = 0; y < image.height; ++y) {
            for (size_t i = 0; i < row.size(); ++i) {
                float v = image.data[size_t(y) * image.width * image.channels + i];
                if (!std::isfinite(v)) throw DataError("write_png: non-finite pixel value");
                row[i] = png_byte(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
            }
            png_write_row(png, row.data());
        }
        png_write_end(png, info);
        png_destroy_write_struct(&png, &info);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
}

FloatMap read_pfm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open PFM for reading: " + path);
    std::string magic;
    int w = 0, h = 0;
    double scale = 0.0;
    f >> magic >> w >> h >> scale;
    if (magic != "Pf") throw DataError("unsupported PFM (expected grayscale 'Pf'): " + path);
    if (w <= 0 || h <= 0) throw DataError("bad PFM dimensions: " + path);
    if (scale >= 0) throw DataError("big-endian PFM not supported: " + path);
    f.get(); // single whitespace after header
    FloatMap map(h, w);
    // PFM rows are stored bottom-to-top.
    for (int y = h - 1; y >= 0; --y) {
        f.read(reinterpret_cast<char*>(&map.data[size_t(y) * w]), std::streamsize(w * 4));
        if (!f) throw DataError("truncated PFM: " + path);
    }
    return map;
}

void write_pfm(const std::string& path, const FloatMap& map) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open PFM for writing: " + path);
    f << "Pf\n" << map.width << " " << map.height << "\n-1.0\n";
    for (int y = map.height - 1; y >= 0; --y)
        f.write(reinterpret_cast<const char*>(&map.data[size_t(y) * map.width]),
                std::streamsize(map.width * 4));
    if (!f) throw DataError("failed writing PFM: " + path);
}

CameraPose read_pose(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open pose file: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed pose JSON in " + path + ": " + e.what());
    }
    CameraPose pose;
    auto p = j.at("position");
    auto q = j.at("quaternion");
    pose.position = Eigen::Vector3d(p.at(0).get<double>(), p.at(1).get<double>(),
                                    p.at(2).get<double>());
    pose.orientation = Eigen::Quaterniond(q.at(0).get<double>(), q.at(1).get<double>(),
                                          q.at(2).get<double>(), q.at(3).get<double>());
    pose.validate();
    return pose;
}

void write_pose(const std::string& path, const CameraPose& pose) {
    pose.validate();
    nlohmann::json j;
    j["position"] = {pose.position.x(), pose.position.y(), pose.position.z()};
    j["quaternion"] = {pose.orientation.w(), pose.orientation.x(), pose.orientation.y(),
                       pose.orientation.z()};
    std::ofstream f(path);
    if (!f) throw DataError("cannot open pose file for writing: " + path);
    f << j.dump(2) << "\n";
}

} // namespace arit::img
