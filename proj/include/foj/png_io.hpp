#pragma once

#include <string>

#include "foj/volume.hpp"

namespace foj {

// 8-bit grayscale PNG, values scaled from [lo, hi] (pass lo == hi to use the
// image's own range).
void write_gray_png(const std::string& path, const double* data, int width,
                    int height, double lo = 0.0, double hi = 0.0);

// Axial (z = D/2), sagittal (x = W/2) and coronal (y = H/2) mid-slices,
// written as <prefix>_axial.png etc., on the volume's global range.
void write_mid_slices(const std::string& prefix, const Volume& v);

}  // namespace foj
