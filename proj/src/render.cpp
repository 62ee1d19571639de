#include "ragent/render.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>

#include "ragent/error.hpp"

namespace ragent {

namespace {

// Polynomial fit of the matplotlib viridis map; evaluated once into a fixed table.
std::array<std::uint8_t, 3> viridis(double t)
{
    constexpr double c0[3] = {0.2777273272234177, 0.005407344544966578, 0.3340998053353061};
    constexpr double c1[3] = {0.1050930431085774, 1.404613529898575, 1.384590162594685};
    constexpr double c2[3] = {-0.3308618287255563, 0.214847559468213, 0.09509516302823659};
    constexpr double c3[3] = {-4.634230498983486, -5.799100973351585, -19.33244095627987};
    constexpr double c4[3] = {6.228269936347081, 14.17993336680509, 56.69055260068105};
    constexpr double c5[3] = {4.776384997670288, -13.74514537774601, -65.35303263337234};
    constexpr double c6[3] = {-5.435455855934631, 4.645852612178535, 26.3124352495832};
    std::array<std::uint8_t, 3> rgb{};
    for (int k = 0; k < 3; ++k) {
        const double v = c0[k] + t * (c1[k] + t * (c2[k] + t * (c3[k] + t * (c4[k] + t * (c5[k] + t * c6[k])))));
        rgb[k] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    }
    return rgb;
}

void append_bytes(png_structp png, png_bytep data, png_size_t len)
{
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + len);
}

}  // namespace

const std::array<std::array<std::uint8_t, 3>, 256>& viridis_lut()
{
    static const auto lut = [] {
        std::array<std::array<std::uint8_t, 3>, 256> t{};
        for (int i = 0; i < 256; ++i) t[i] = viridis(i / 255.0);
        return t;
    }();
    return lut;
}

std::vector<std::uint8_t> render_png(const Matrix& map, int scale)
{
    if (map.empty() || scale < 1) throw Error(ErrorCode::ConfigError, "cannot render an empty map");
    const auto [lo_it, hi_it] = std::minmax_element(map.data().begin(), map.data().end());
    const double lo = *lo_it, span = *hi_it - *lo_it;
    const auto& lut = viridis_lut();

    const std::size_t width = map.rows() * static_cast<std::size_t>(scale);
    const std::size_t height = map.cols() * static_cast<std::size_t>(scale);
    std::vector<std::uint8_t> pixels(width * height * 3);
    for (std::size_t y = 0; y < height; ++y) {
        const std::size_t bin = map.cols() - 1 - y / scale;
        for (std::size_t x = 0; x < width; ++x) {
            const double v = map(x / scale, bin);
            const int level = span > 0.0 ? static_cast<int>(std::lround((v - lo) / span * 255.0)) : 0;
            std::copy_n(lut[std::clamp(level, 0, 255)].begin(), 3, pixels.begin() + (y * width + x) * 3);
        }
    }

    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error(ErrorCode::IoError, "png allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorCode::IoError, "png encoding failed");
    }
    png_set_write_fn(png, &out, append_bytes, nullptr);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_NONE);
    png_write_info(png, info);
    for (std::size_t y = 0; y < height; ++y) png_write_row(png, pixels.data() + y * width * 3);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

}  // namespace ragent
