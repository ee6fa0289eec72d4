#include <doctest.h>

#include <stdexcept>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "foj/metrics.hpp"
#include "oracles.hpp"

using namespace foj;

TEST_CASE("psnr") {
    SUBCASE("identical volumes hit the 99 dB sentinel") {
        const Volume v = oracle::random_volume(4, 5, 6, 1);
        const auto r = psnr(v, v);
        CHECK(r.mse == 0.0);
        CHECK(r.psnr_db == 99.0);
    }

    SUBCASE("binary reference with uniform 0.1 error gives exactly 20 dB") {
        Volume ref(4, 4, 4);
        for (int z = 0; z < 4; ++z)
            for (int y = 0; y < 4; ++y)
                for (int x = 0; x < 4; ++x) ref.at(z, y, x) = (x + y + z) % 2;
        Volume test = ref;
        for (auto& v : test.data) v += 0.1;
        const auto r = psnr(ref, test);
        CHECK(r.mse == doctest::Approx(0.01).epsilon(1e-12));
        CHECK(r.psnr_db == doctest::Approx(20.0).epsilon(1e-12));
    }

    SUBCASE("random pair matches a scalar-loop oracle") {
        const Volume a = oracle::random_volume(6, 6, 6, 2);
        const Volume b = oracle::random_volume(6, 6, 6, 3);
        const auto r = psnr(a, b);
        double mse = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = a.data[i] - b.data[i];
            mse += d * d;
        }
        mse /= a.size();
        const double peak = a.max_value() - a.min_value();
        CHECK(r.mse == doctest::Approx(mse).epsilon(1e-10));
        CHECK(r.psnr_db ==
              doctest::Approx(10.0 * std::log10(peak * peak / mse))
                  .epsilon(1e-10));
    }

    SUBCASE("shift invariance: psnr depends only on |c| and the peak") {
        const Volume ref = oracle::random_volume(5, 5, 5, 4);
        Volume up = ref, down = ref;
        for (auto& v : up.data) v += 0.2;
        for (auto& v : down.data) v -= 0.2;
        CHECK(psnr(ref, up).psnr_db ==
              doctest::Approx(psnr(ref, down).psnr_db).epsilon(1e-12));
    }

    SUBCASE("scaling the error strictly decreases psnr") {
        const Volume ref = oracle::random_volume(5, 5, 5, 5);
        Volume t1 = ref, t2 = ref;
        const Volume err = oracle::random_volume(5, 5, 5, 6, -0.1, 0.1);
        for (std::size_t i = 0; i < ref.size(); ++i) {
            t1.data[i] += err.data[i];
            t2.data[i] += 1.5 * err.data[i];
        }
        CHECK(psnr(ref, t2).psnr_db < psnr(ref, t1).psnr_db);
    }

    SUBCASE("errors") {
        const Volume a = oracle::random_volume(4, 4, 4, 7);
        Volume wrong(4, 4, 5);
        CHECK_THROWS_AS(psnr(a, wrong), std::invalid_argument);
        Volume flat(4, 4, 4, 0.7);
        CHECK_THROWS_AS(psnr(flat, a), std::invalid_argument);
    }
}

TEST_CASE("metric report serialization") {
    MetricReport r;
    r.psnr_db = 31.5;
    r.mse = 1e-3;
    r.peak = 1.0;
    r.extras["chamfer"] = 0.25;
    const std::string path = "test_metrics_report.json";
    write_metric_report(path, r);
    std::ifstream f(path);
    std::string text((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
    CHECK(text.find("psnr_db") != std::string::npos);
    CHECK(text.find("chamfer") != std::string::npos);
    CHECK(text.find("peak_convention") != std::string::npos);
    std::remove(path.c_str());
}
