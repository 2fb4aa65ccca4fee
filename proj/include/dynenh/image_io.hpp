#pragma once

#include "dynenh/imgcore.hpp"

#include <filesystem>
#include <stdexcept>

namespace dynenh {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reads 8-bit PNG (gray, gray+alpha, RGB, RGBA) or binary PPM/PGM.
/// Intensities map to v/255.
ImageRGB read_image(const std::filesystem::path& path);

/// Writes by extension: .png or .ppm. Values are round(v*255) clamped.
void write_image(const std::filesystem::path& path, const ImageRGB& img);
void write_gray(const std::filesystem::path& path, const Plane& p);

/// "P-PLANE h w\n" followed by h*w little-endian float64, row-major.
void write_plane(const std::filesystem::path& path, const Plane& p);
Plane read_plane(const std::filesystem::path& path);

}  // namespace dynenh
