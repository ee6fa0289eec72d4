#include "foj/phantom.hpp"

#include <cmath>
#include <stdexcept>

namespace foj {

namespace {

std::array<double, 3> normalize(std::array<double, 3> v) {
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    return {v[0] / n, v[1] / n, v[2] / n};
}

struct Ellipsoid {
    std::array<double, 3> center;  // fractions of (x, y, z) extent, centered at 0
    std::array<double, 3> radii;   // fractions of extent
    double value;
};

}  // namespace

bool is_known_phantom(const std::string& kind) {
    return kind == "halfspace" || kind == "wedge3" || kind == "cube" ||
           kind == "shepp3d-lite";
}

Volume make_phantom(const std::string& kind, std::array<int, 3> dims) {
    const int D = dims[0], H = dims[1], W = dims[2];
    if (D < 2 || H < 2 || W < 2)
        throw std::invalid_argument("phantom dims must be >= 2");
    Volume v(D, H, W);
    const double sp = 1.0 / std::max({D, H, W});
    v.spacing = {sp, sp, sp};

    if (kind == "halfspace") {
        for (int z = 0; z < D; ++z)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x)
                    v.at(z, y, x) = x >= W / 2 ? 1.0 : 0.0;
        return v;
    }

    if (kind == "wedge3") {
        // Hard three-plane junction through the volume center; regions follow
        // the (+,-,-), (-,+,-), (-,-,+) assignment with a zero background.
        const auto n1 = normalize({1.0, 0.35, 0.2});
        const auto n2 = normalize({-0.25, 1.0, 0.15});
        const auto n3 = normalize({0.1, -0.3, 1.0});
        const double cx = 0.5 * W, cy = 0.5 * H, cz = 0.5 * D;
        for (int z = 0; z < D; ++z)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    const double rx = x + 0.5 - cx;
                    const double ry = y + 0.5 - cy;
                    const double rz = z + 0.5 - cz;
                    const bool s1 = rx * n1[0] + ry * n1[1] + rz * n1[2] >= 0.0;
                    const bool s2 = rx * n2[0] + ry * n2[1] + rz * n2[2] >= 0.0;
                    const bool s3 = rx * n3[0] + ry * n3[1] + rz * n3[2] >= 0.0;
                    double val = 0.0;
                    if (s1 && !s2 && !s3) val = 1.0;
                    else if (!s1 && s2 && !s3) val = 0.6;
                    else if (!s1 && !s2 && s3) val = 0.3;
                    v.at(z, y, x) = val;
                }
        return v;
    }

    if (kind == "cube") {
        const int qz = D / 4, qy = H / 4, qx = W / 4;
        for (int z = qz; z < D - qz; ++z)
            for (int y = qy; y < H - qy; ++y)
                for (int x = qx; x < W - qx; ++x) v.at(z, y, x) = 1.0;
        return v;
    }

    if (kind == "shepp3d-lite") {
        const Ellipsoid parts[] = {
            {{0.0, 0.0, 0.0}, {0.42, 0.36, 0.42}, 0.8},
            {{0.0, 0.02, 0.0}, {0.36, 0.30, 0.36}, 0.4},
            {{0.12, 0.0, 0.08}, {0.10, 0.08, 0.10}, 1.0},
            {{-0.13, -0.04, -0.06}, {0.08, 0.10, 0.09}, 0.1},
            {{0.0, -0.16, 0.12}, {0.05, 0.05, 0.05}, 0.95},
        };
        for (int z = 0; z < D; ++z)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    const double fx = (x + 0.5) / W - 0.5;
                    const double fy = (y + 0.5) / H - 0.5;
                    const double fz = (z + 0.5) / D - 0.5;
                    double val = 0.0;
                    for (const auto& e : parts) {
                        const double ax = (fx - e.center[0]) / e.radii[0];
                        const double ay = (fy - e.center[1]) / e.radii[1];
                        const double az = (fz - e.center[2]) / e.radii[2];
                        if (ax * ax + ay * ay + az * az <= 1.0) val = e.value;
                    }
                    v.at(z, y, x) = val;
                }
        return v;
    }

    throw std::invalid_argument("unknown phantom kind: " + kind);
}

}  // namespace foj
