#include "dynenh/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

namespace dynenh {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

bool has_ext(const std::filesystem::path& p, const char* ext) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
    return e == ext;
}

ImageRGB read_png(const std::filesystem::path& path) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw IoError("cannot read PNG " + path.string() + ": " + image.message);
    image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
        png_image_free(&image);
        throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
    }
    ImageRGB out(image.height, image.width);
    for (std::size_t i = 0; i < static_cast<std::size_t>(image.height) * image.width; ++i)
        for (int c = 0; c < 3; ++c) out.channel(c).values()[i] = buf[3 * i + c] / 255.0;
    return out;
}

void write_png(const std::filesystem::path& path, const std::vector<std::uint8_t>& buf,
               std::size_t h, std::size_t w, bool rgb) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w);
    image.height = static_cast<png_uint_32>(h);
    image.format = rgb ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.c_str(), 0, buf.data(), 0, nullptr))
        throw IoError("cannot write PNG " + path.string() + ": " + image.message);
}

// Netpbm header token, skipping '#' comments.
std::string next_token(std::istream& in) {
    std::string tok;
    while (in >> tok) {
        if (tok[0] == '#') {
            std::string rest;
            std::getline(in, rest);
            continue;
        }
        return tok;
    }
    throw IoError("truncated netpbm header");
}

ImageRGB read_pnm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const std::string magic = next_token(in);
    if (magic != "P6" && magic != "P5") throw IoError(path.string() + ": unsupported netpbm type");
    const std::size_t w = std::stoul(next_token(in));
    const std::size_t h = std::stoul(next_token(in));
    const int maxval = std::stoi(next_token(in));
    if (maxval != 255) throw IoError(path.string() + ": only 8-bit netpbm supported");
    in.get();
    const std::size_t ch = magic == "P6" ? 3 : 1;
    std::vector<std::uint8_t> buf(w * h * ch);
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
        throw IoError(path.string() + ": truncated pixel data");
    ImageRGB out(h, w);
    for (std::size_t i = 0; i < h * w; ++i)
        for (int c = 0; c < 3; ++c)
            out.channel(c).values()[i] = buf[ch * i + (ch == 3 ? c : 0)] / 255.0;
    return out;
}

}  // namespace

ImageRGB read_image(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("missing image file: " + path.string());
    if (has_ext(path, ".png")) return read_png(path);
    if (has_ext(path, ".ppm") || has_ext(path, ".pgm") || has_ext(path, ".pnm"))
        return read_pnm(path);
    throw IoError("unsupported image extension: " + path.string());
}

void write_image(const std::filesystem::path& path, const ImageRGB& img) {
    const std::size_t h = img.height(), w = img.width();
    std::vector<std::uint8_t> buf(h * w * 3);
    for (std::size_t i = 0; i < h * w; ++i)
        for (int c = 0; c < 3; ++c) buf[3 * i + c] = to_byte(img.channel(c).values()[i]);
    if (has_ext(path, ".png")) {
        write_png(path, buf, h, w, true);
    } else if (has_ext(path, ".ppm")) {
        std::ofstream out(path, std::ios::binary);
        out << "P6\n" << w << ' ' << h << "\n255\n";
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!out) throw IoError("cannot write " + path.string());
    } else {
        throw IoError("unsupported image extension: " + path.string());
    }
}

void write_gray(const std::filesystem::path& path, const Plane& p) {
    if (has_ext(path, ".png")) {
        std::vector<std::uint8_t> buf(p.size());
        std::transform(p.values().begin(), p.values().end(), buf.begin(), to_byte);
        write_png(path, buf, p.height(), p.width(), false);
    } else {
        write_image(path, ImageRGB(p, p, p));
    }
}

void write_plane(const std::filesystem::path& path, const Plane& p) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "P-PLANE " << p.height() << ' ' << p.width() << '\n';
    for (double v : p.values()) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
    if (!out) throw IoError("cannot write " + path.string());
}

Plane read_plane(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    std::string magic;
    std::size_t h = 0, w = 0;
    if (!(hs >> magic >> h >> w) || magic != "P-PLANE")
        throw IoError(path.string() + ": not a P-PLANE file");
    std::vector<double> data(h * w);
    for (double& v : data) {
        std::uint64_t bits = 0;
        if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits))
            throw IoError(path.string() + ": truncated plane data");
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        v = std::bit_cast<double>(bits);
    }
    return Plane(h, w, std::move(data));
}

}  // namespace dynenh
