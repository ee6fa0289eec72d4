#include <doctest.h>

#include <stdexcept>
#include <cmath>
#include <random>

#include "foj/junction.hpp"
#include "oracles.hpp"

using namespace foj;

TEST_CASE("plane_normal") {
    SUBCASE("polar axis") {
        const auto n = plane_normal(0.0, 1.234);
        CHECK(n[0] == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(n[1] == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(n[2] == doctest::Approx(1.0));
    }
    SUBCASE("equatorial") {
        const auto n = plane_normal(M_PI / 2, 0.0);
        CHECK(n[0] == doctest::Approx(1.0));
        CHECK(std::fabs(n[1]) < 1e-15);
        CHECK(std::fabs(n[2]) < 1e-15);
    }
    SUBCASE("matches spherical-coordinate oracle") {
        const auto n = plane_normal(M_PI / 3, M_PI / 4);
        const auto o = oracle::spherical_normal(M_PI / 3, M_PI / 4);
        for (int a = 0; a < 3; ++a)
            CHECK(n[a] == doctest::Approx(o[a]).epsilon(1e-12));
        CHECK(n[0] * n[0] + n[1] * n[1] + n[2] * n[2] == doctest::Approx(1.0));
    }
    SUBCASE("unit norm for random angles") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> uni(-10, 10);
        for (int i = 0; i < 50; ++i) {
            const auto n = plane_normal(uni(rng), uni(rng));
            CHECK(n[0] * n[0] + n[1] * n[1] + n[2] * n[2] ==
                  doctest::Approx(1.0).epsilon(1e-14));
        }
    }
}

TEST_CASE("signed_distance") {
    JunctionParams p;
    SUBCASE("vertex itself is at distance zero") {
        p.vertex = {0.3, -0.1, 0.7};
        p.angles = {{{0.3, 1.0}, {1.1, -2.0}, {2.0, 0.5}}};
        for (int l = 0; l < 3; ++l)
            CHECK(signed_distance(p, l, p.vertex) ==
                  doctest::Approx(0.0).epsilon(1e-15));
    }
    SUBCASE("axis-aligned projection") {
        p.vertex = {0, 0, 0};
        p.angles[0] = {M_PI / 2, 0.0};  // normal (1,0,0)
        CHECK(signed_distance(p, 0, {2.5, 7.0, -3.0}) == doctest::Approx(2.5));
    }
    SUBCASE("random params match dot-product oracle") {
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> uni(-2, 2);
        for (int i = 0; i < 30; ++i) {
            const auto params = oracle::random_params(1000 + i);
            const std::array<double, 3> q{uni(rng), uni(rng), uni(rng)};
            for (int l = 0; l < 3; ++l) {
                const auto n = oracle::spherical_normal(params.angles[l][0],
                                                        params.angles[l][1]);
                const double want = (q[0] - params.vertex[0]) * n[0] +
                                    (q[1] - params.vertex[1]) * n[1] +
                                    (q[2] - params.vertex[2]) * n[2];
                CHECK(signed_distance(params, l, q) ==
                      doctest::Approx(want).epsilon(1e-12));
            }
        }
    }
    SUBCASE("translation equivariance") {
        auto params = oracle::random_params(77);
        const std::array<double, 3> q{0.4, -0.9, 0.2};
        const std::array<double, 3> t{1.5, -2.0, 0.25};
        const double before = signed_distance(params, 1, q);
        auto shifted = params;
        for (int a = 0; a < 3; ++a) shifted.vertex[a] += t[a];
        const double after = signed_distance(
            shifted, 1, {q[0] + t[0], q[1] + t[1], q[2] + t[2]});
        CHECK(after == doctest::Approx(before).epsilon(1e-13));
    }
}

TEST_CASE("heaviside") {
    CHECK(heaviside(0.0, 0.3) == doctest::Approx(0.5));
    for (double d : {0.01, 0.5, 3.0, 100.0})
        for (double eta : {0.01, 0.1, 1.0})
            CHECK(heaviside(d, eta) + heaviside(-d, eta) ==
                  doctest::Approx(1.0).epsilon(1e-15));
    // frozen oracle value: H_{0.01}(1.0) = 0.5 * (1 + (2/pi) atan(100))
    CHECK(heaviside(1.0, 0.01) ==
          doctest::Approx(0.99681700723509174).epsilon(1e-15));
    // monotone
    CHECK(heaviside(-0.2, 0.05) < heaviside(-0.1, 0.05));
    CHECK(heaviside(0.3, 0.05) < heaviside(0.4, 0.05));
    CHECK_THROWS_AS(heaviside(0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(heaviside(0.0, -1.0), std::invalid_argument);
}

TEST_CASE("region_indicators") {
    const int R = 6;
    const auto& coords = PatchCoords::get(R);

    SUBCASE("hard-assignment limit inside a (+,-,-) cell") {
        JunctionParams p;
        p.num_regions = 3;
        p.vertex = {0, 0, 0};
        p.angles[0] = {M_PI / 2, 0.0};         // n = +x
        p.angles[1] = {M_PI / 2, M_PI / 2};    // n = +y
        p.angles[2] = {0.0, 0.0};              // n = +z
        RegionField rf;
        region_indicators(p, coords, 1e-6, rf);
        // voxel with x > 0, y < 0, z < 0 lies strictly inside pattern 1
        std::size_t idx = 0;
        bool found = false;
        for (std::size_t i = 0; i < coords.x.size(); ++i)
            if (coords.x[i] > 0.3 && coords.y[i] < -0.3 && coords.z[i] < -0.3) {
                idx = i;
                found = true;
                break;
            }
        REQUIRE(found);
        CHECK(rf.u[0][idx] == doctest::Approx(1.0).epsilon(1e-5));
        CHECK(rf.u[1][idx] == doctest::Approx(0.0).epsilon(1e-5));
        CHECK(rf.u[2][idx] == doctest::Approx(0.0).epsilon(1e-5));
    }

    SUBCASE("M=8 partitions unity") {
        auto p = oracle::random_params(5, 8);
        RegionField rf;
        region_indicators(p, coords, 0.05, rf);
        for (std::size_t i = 0; i < rf.n; ++i) {
            double total = 0;
            for (int j = 0; j < 8; ++j) total += rf.u[j][i];
            CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        }
    }

    SUBCASE("M=3 random params match per-voxel oracle") {
        auto p = oracle::random_params(9, 3);
        RegionField rf;
        region_indicators(p, coords, 0.01, rf);
        std::size_t i = 0;
        for (int z = 0; z < R; ++z)
            for (int y = 0; y < R; ++y)
                for (int x = 0; x < R; ++x, ++i) {
                    const auto pt = oracle::lattice_point(R, z, y, x);
                    for (int j = 0; j < 3; ++j)
                        CHECK(rf.u[j][i] ==
                              doctest::Approx(
                                  oracle::region_indicator(p, j, pt, 0.01))
                                  .epsilon(1e-12));
                }
    }

    SUBCASE("bounds and partial partition for M<8") {
        for (int M : {2, 3, 5}) {
            auto p = oracle::random_params(20 + M, M);
            RegionField rf;
            region_indicators(p, coords, 0.02, rf);
            for (std::size_t i = 0; i < rf.n; ++i) {
                double total = 0;
                for (int j = 0; j < M; ++j) {
                    CHECK(rf.u[j][i] >= 0.0);
                    CHECK(rf.u[j][i] <= 1.0);
                    total += rf.u[j][i];
                }
                CHECK(total <= 1.0 + 1e-9);
            }
        }
    }

    SUBCASE("invalid M") {
        auto p = oracle::random_params(1);
        p.num_regions = 1;
        RegionField rf;
        CHECK_THROWS_AS(region_indicators(p, coords, 0.01, rf),
                        std::invalid_argument);
        p.num_regions = 9;
        CHECK_THROWS_AS(region_indicators(p, coords, 0.01, rf),
                        std::invalid_argument);
    }
}

TEST_CASE("boundary_map") {
    const int R = 6;
    const auto& coords = PatchCoords::get(R);

    SUBCASE("peak on the plane, half at delta") {
        JunctionParams p;
        p.vertex = {coords.x[0], coords.y[0], coords.z[0]};  // on voxel 0
        p.angles = {{{M_PI / 2, 0.0}, {M_PI / 2, M_PI / 2}, {0.0, 0.0}}};
        std::vector<double> b;
        boundary_map(p, coords, 0.1, b);
        CHECK(b[0] == doctest::Approx(1.0).epsilon(1e-12));

        // analytic: min|d| == delta gives exactly 1/2
        CHECK(0.1 * 0.1 / (0.1 * 0.1 + 0.1 * 0.1) == doctest::Approx(0.5));
    }

    SUBCASE("random configuration matches composed-formula oracle") {
        auto p = oracle::random_params(31);
        std::vector<double> b;
        boundary_map(p, coords, 0.07, b);
        std::size_t i = 0;
        for (int z = 0; z < R; ++z)
            for (int y = 0; y < R; ++y)
                for (int x = 0; x < R; ++x, ++i)
                    CHECK(b[i] == doctest::Approx(oracle::boundary_value(
                                      p, oracle::lattice_point(R, z, y, x), 0.07))
                                      .epsilon(1e-12));
    }

    SUBCASE("invariant to flipping any plane normal") {
        auto p = oracle::random_params(32);
        std::vector<double> b0, b1;
        boundary_map(p, coords, 0.1, b0);
        auto flipped = p;
        // antipode: theta -> pi - theta, phi -> phi + pi flips the normal
        flipped.angles[1][0] = M_PI - flipped.angles[1][0];
        flipped.angles[1][1] += M_PI;
        boundary_map(flipped, coords, 0.1, b1);
        for (std::size_t i = 0; i < b0.size(); ++i)
            CHECK(b0[i] == doctest::Approx(b1[i]).epsilon(1e-12));
    }

    SUBCASE("delta validation") {
        auto p = oracle::random_params(33);
        std::vector<double> b;
        CHECK_THROWS_AS(boundary_map(p, coords, 0.0, b), std::invalid_argument);
    }
}

TEST_CASE("angle periodicity: phi + 2pi leaves fields unchanged") {
    const auto& coords = PatchCoords::get(5);
    auto p = oracle::random_params(44);
    RegionField a, b;
    region_indicators(p, coords, 0.01, a);
    auto shifted = p;
    shifted.angles[0][1] += 2.0 * M_PI;
    shifted.angles[2][1] -= 2.0 * M_PI;
    region_indicators(shifted, coords, 0.01, b);
    for (int j = 0; j < 3; ++j)
        for (std::size_t i = 0; i < a.n; ++i)
            CHECK(a.u[j][i] == doctest::Approx(b.u[j][i]).epsilon(1e-12));
}

TEST_CASE("indicator_gradients") {
    const int R = 5;
    const auto& coords = PatchCoords::get(R);
    const double eta = 0.01;

    SUBCASE("single-factor chain rule at the plane") {
        // Plane 1 passes through the probe voxel (vertex displaced along the
        // plane), planes 2 and 3 are saturated there, so the vertex gradient
        // collapses to -n1 * H'(0) * (1-H(d2))(1-H(d3)).
        JunctionParams p;
        p.num_regions = 3;
        const std::size_t idx = (2 * R + 2) * R + 2;
        const auto pt = oracle::lattice_point(R, 2, 2, 2);
        p.vertex = {pt[0], pt[1] + 5.0, pt[2]};   // tangent to plane 1
        p.angles[0] = {M_PI / 2, 0.0};            // n1 = +x
        p.angles[1] = {M_PI / 2, M_PI / 2};       // n2 = +y (d2 = -5)
        p.angles[2] = {0.1, M_PI / 2};            // near +z, tilted toward +y
        REQUIRE(std::fabs(signed_distance(p, 0, pt)) < 1e-12);
        REQUIRE(signed_distance(p, 1, pt) < -1.0);
        REQUIRE(signed_distance(p, 2, pt) < -0.1);

        IndicatorGradients g;
        indicator_gradients(p, coords, eta, g);
        const double d2 = signed_distance(p, 1, pt);
        const double d3 = signed_distance(p, 2, pt);
        const double expect = heaviside_prime(0.0, eta) *
                              (1.0 - heaviside(d2, eta)) *
                              (1.0 - heaviside(d3, eta));
        CHECK(std::fabs(g.grad[0][0][idx]) ==
              doctest::Approx(expect).epsilon(1e-9));
    }

    SUBCASE("all gradients vs central finite differences") {
        for (int trial = 0; trial < 4; ++trial) {
            const auto base = oracle::random_params(500 + trial);
            IndicatorGradients g;
            indicator_gradients(base, coords, eta, g);
            const auto flat0 = base.flatten();
            double max_rel = 0.0;
            for (int j = 0; j < 3; ++j) {
                // probe a few voxels
                for (std::size_t idx : {std::size_t{0}, std::size_t{62},
                                        std::size_t{124}}) {
                    const int z = static_cast<int>(idx / (R * R));
                    const int y = static_cast<int>((idx / R) % R);
                    const int x = static_cast<int>(idx % R);
                    const auto pt = oracle::lattice_point(R, z, y, x);
                    auto f = [&](const std::vector<double>& v) {
                        std::array<double, kGeomParams> arr;
                        std::copy(v.begin(), v.end(), arr.begin());
                        const auto pp = JunctionParams::unflatten(arr, 3);
                        return oracle::region_indicator(pp, j, pt, eta);
                    };
                    const auto fd = oracle::central_diff(
                        f, {flat0.begin(), flat0.end()}, 1e-6);
                    for (int k = 0; k < kGeomParams; ++k) {
                        const double an = g.grad[j][k][idx];
                        const double scale = std::max(std::fabs(fd[k]), 1e-3);
                        max_rel = std::max(max_rel,
                                           std::fabs(an - fd[k]) / scale);
                    }
                }
            }
            CHECK(max_rel < 1e-4);
        }
    }

    SUBCASE("saturated plane: gradients vanish as the plane recedes") {
        // Vertex far along the plane-1 normal: |d1| >> eta over the patch.
        JunctionParams p;
        p.num_regions = 3;
        p.angles[0] = {M_PI / 2, 0.0};         // n1 = +x
        p.angles[1] = {M_PI / 2, M_PI / 2};    // n2 = +y
        p.angles[2] = {0.0, 0.0};              // n3 = +z
        IndicatorGradients g_near, g_far;
        p.vertex = {-1e2 * 0.01, 0.0, 0.0};  // |d1| ~ 1e2 * eta
        indicator_gradients(p, coords, 0.01, g_near);
        p.vertex = {-1e6 * 0.01, 0.0, 0.0};  // |d1| ~ 1e6 * eta
        indicator_gradients(p, coords, 0.01, g_far);
        double near_max = 0, far_max = 0;
        for (std::size_t i = 0; i < g_near.n; ++i) {
            near_max = std::max(near_max, std::fabs(g_near.grad[0][3][i]));
            far_max = std::max(far_max, std::fabs(g_far.grad[0][3][i]));
        }
        // theta-gradient decays like eta/|d| as the plane saturates
        CHECK(far_max < 1e-6);
        CHECK(far_max < 1e-3 * near_max);
    }
}
