#include "foj/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <stdexcept>
#include <vector>

namespace foj {

void write_gray_png(const std::string& path, const double* data, int width,
                    int height, double lo, double hi) {
    if (lo >= hi) {
        lo = data[0];
        hi = data[0];
        for (int i = 1; i < width * height; ++i) {
            lo = std::min(lo, data[i]);
            hi = std::max(hi, data[i]);
        }
        if (hi <= lo) hi = lo + 1.0;
    }
    std::vector<png_byte> row(width);
    std::vector<png_byte> image(static_cast<std::size_t>(width) * height);
    const double scale = 255.0 / (hi - lo);
    for (int i = 0; i < width * height; ++i) {
        const double v = std::clamp((data[i] - lo) * scale, 0.0, 255.0);
        image[i] = static_cast<png_byte>(v + 0.5);
    }

    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw std::runtime_error("cannot open for write: " + path);
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        std::fclose(fp);
        throw std::runtime_error("png write failed: " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y)
        png_write_row(png, image.data() + static_cast<std::size_t>(y) * width);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

void write_mid_slices(const std::string& prefix, const Volume& v) {
    const double lo = v.min_value();
    const double hi = v.max_value();

    {  // axial: z fixed, rows = y, cols = x
        std::vector<double> img(static_cast<std::size_t>(v.H) * v.W);
        const int z = v.D / 2;
        for (int y = 0; y < v.H; ++y)
            for (int x = 0; x < v.W; ++x)
                img[static_cast<std::size_t>(y) * v.W + x] = v.at(z, y, x);
        write_gray_png(prefix + "_axial.png", img.data(), v.W, v.H, lo, hi);
    }
    {  // coronal: y fixed, rows = z, cols = x
        std::vector<double> img(static_cast<std::size_t>(v.D) * v.W);
        const int y = v.H / 2;
        for (int z = 0; z < v.D; ++z)
            for (int x = 0; x < v.W; ++x)
                img[static_cast<std::size_t>(z) * v.W + x] = v.at(z, y, x);
        write_gray_png(prefix + "_coronal.png", img.data(), v.W, v.D, lo, hi);
    }
    {  // sagittal: x fixed, rows = z, cols = y
        std::vector<double> img(static_cast<std::size_t>(v.D) * v.H);
        const int x = v.W / 2;
        for (int z = 0; z < v.D; ++z)
            for (int y = 0; y < v.H; ++y)
                img[static_cast<std::size_t>(z) * v.H + y] = v.at(z, y, x);
        write_gray_png(prefix + "_sagittal.png", img.data(), v.H, v.D, lo, hi);
    }
}

}  // namespace foj
