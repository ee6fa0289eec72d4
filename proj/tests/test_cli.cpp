#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include <random>

#include "foj/volume.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* p = std::getenv("FOJ_CLI");
    return p ? p : "";
}

int run(const std::string& args) {
    const std::string cmd = cli_path() + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::path("cli_tmp") / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& leaf) const {
        return (path / leaf).string();
    }
};

}  // namespace

TEST_CASE("cli: phantom generation is deterministic and exact") {
    if (cli_path().empty()) {
        MESSAGE("FOJ_CLI not set; skipping");
        return;
    }
    TempDir dir("phantom");
    const std::string out1 = dir / "a.bin";
    const std::string out2 = dir / "b.bin";
    CHECK(run("phantom --kind halfspace --dims 16 --output " + out1 +
              " --out-dir " + (dir / "run1")) == 0);
    CHECK(run("phantom --kind halfspace --dims 16 --output " + out2 +
              " --out-dir " + (dir / "run2")) == 0);
    CHECK(slurp(out1) == slurp(out2));
    CHECK(slurp(out1 + ".json") == slurp(out2 + ".json"));

    // halfspace holds exactly two distinct float values
    const std::string bytes = slurp(out1);
    REQUIRE(bytes.size() == 16 * 16 * 16 * 4);
    std::set<std::string> distinct;
    for (std::size_t i = 0; i < bytes.size(); i += 4)
        distinct.insert(bytes.substr(i, 4));
    CHECK(distinct.size() == 2);

    CHECK(run("phantom --kind nosuch --dims 8 --output " + (dir / "c.bin") +
              " --out-dir " + (dir / "run3")) == 1);
}

TEST_CASE("cli: denoise on a tiny volume, resolved config round-trips") {
    if (cli_path().empty()) {
        MESSAGE("FOJ_CLI not set; skipping");
        return;
    }
    TempDir dir("denoise");
    const std::string vol = dir / "in.bin";
    REQUIRE(run("phantom --kind halfspace --dims 12 --output " + vol +
                " --out-dir " + (dir / "ph")) == 0);

    // small config to keep the runtime down
    const std::string cfgpath = dir / "cfg.json";
    {
        std::ofstream f(cfgpath);
        f << R"({"solver": {"patch_size": 8, "stride": 4, "n_refine": 3,
                 "angular_polar": 6, "angular_azimuth": 12}})";
    }
    const std::string out = dir / "out.bin";
    CHECK(run("denoise --input " + vol + " --output " + out + " --config " +
              cfgpath + " --reference " + vol + " --threads 1 --out-dir " +
              (dir / "run")) == 0);
    CHECK(fs::exists(out));
    CHECK(fs::exists(dir / "run/resolved_config.json"));
    CHECK(fs::exists(dir / "run/state.json"));
    CHECK(fs::exists(dir / "run/loss_trace.csv"));
    CHECK(fs::exists(dir / "run/metrics.json"));
    CHECK(fs::exists(dir / "run/denoised_axial.png"));

    // resolved config re-parses to the same document
    const std::string resolved = slurp(dir / "run/resolved_config.json");
    const auto j = nlohmann::json::parse(resolved);
    CHECK(j["solver"]["patch_size"] == 8);
    CHECK(j["solver"]["n_refine"] == 3);

    // missing input: exit 1 and the path appears in the message
    CHECK(run("denoise --input " + (dir / "missing.bin") + " --output " + out +
              " --out-dir " + (dir / "run2")) == 1);
}

TEST_CASE("cli: ct rejects zero views") {
    if (cli_path().empty()) {
        MESSAGE("FOJ_CLI not set; skipping");
        return;
    }
    TempDir dir("ct0");
    CHECK(run("ct --phantom cube --views 0 --output " + (dir / "r.bin") +
              " --out-dir " + (dir / "run")) == 1);
}

TEST_CASE("cli: ct cgls end-to-end with fixed seed is bit-identical") {
    if (cli_path().empty()) {
        MESSAGE("FOJ_CLI not set; skipping");
        return;
    }
    TempDir dir("ctdet");
    const std::string cfgpath = dir / "cfg.json";
    {
        std::ofstream f(cfgpath);
        f << R"({"tomo": {"views": 6, "photons": 1000, "phantom_dims": [12,12,12]},
                 "pgd": {"n_outer": 5}})";
    }
    auto invoke = [&](const std::string& tag) {
        return run("ct --phantom cube --method cgls --config " + cfgpath +
                   " --seed 11 --threads 1 --output " + (dir / (tag + ".bin")) +
                   " --out-dir " + (dir / tag));
    };
    CHECK(invoke("a") == 0);
    CHECK(invoke("b") == 0);
    CHECK(slurp(dir / "a.bin") == slurp(dir / "b.bin"));
    CHECK(slurp(dir / "a/metrics.json") == slurp(dir / "b/metrics.json"));
    CHECK(slurp(dir / "a/sinogram.bin") == slurp(dir / "b/sinogram.bin"));
    CHECK(slurp(dir / "a/residual_trace.csv") == slurp(dir / "b/residual_trace.csv"));
}

TEST_CASE("cli: pointcloud levels are validated") {
    if (cli_path().empty()) {
        MESSAGE("FOJ_CLI not set; skipping");
        return;
    }
    TempDir dir("pc");
    const std::string cloud = dir / "in.xyz";
    {
        std::ofstream f(cloud);
        for (int i = 0; i < 200; ++i)
            f << (i % 10) << " " << (i / 10 % 10) << " " << (i / 100) << "\n";
    }
    CHECK(run("pointcloud --input " + cloud + " --noise spread --level 123 "
              "--output " + (dir / "o.xyz") + " --out-dir " + (dir / "r1")) == 1);
    CHECK(run("pointcloud --input " + cloud + " --noise blizzard --level 0 "
              "--output " + (dir / "o.xyz") + " --out-dir " + (dir / "r2")) == 1);
}

TEST_CASE("cli: pointcloud spread level 0 reduces to quantization") {
    if (cli_path().empty()) {
        MESSAGE("FOJ_CLI not set; skipping");
        return;
    }
    TempDir dir("pcq");
    const std::string cloud = dir / "in.xyz";
    {
        // a dense plane of points spanning [0,9]^2 x {0}
        std::ofstream f(cloud);
        for (int i = 0; i < 40; ++i)
            for (int j = 0; j < 40; ++j)
                f << (i * 0.25) << " " << (j * 0.25) << " 0\n";
    }
    const std::string cfgpath = dir / "cfg.json";
    {
        std::ofstream f(cfgpath);
        f << R"({"solver": {"patch_size": 8, "stride": 8, "n_refine": 2,
                 "angular_polar": 6, "angular_azimuth": 12},
                 "pointcloud": {"grid_dim": 24, "topk": 1600}})";
    }
    const std::string report = dir / "report.json";
    CHECK(run("pointcloud --input " + cloud + " --noise spread --level 0 "
              "--output " + (dir / "o.xyz") + " --report " + report +
              " --config " + cfgpath + " --threads 1 --out-dir " +
              (dir / "run")) == 0);
    const auto j = nlohmann::json::parse(slurp(report));
    // chamfer of the raw top-k baseline vs clean is bounded by the voxel
    // quantization error: 3 * (voxel/2)^2 per direction, doubled
    const double vox = 10.0 / 22.0 * 1.02;  // padded extent over grid-2, slack
    const double bound = 2.0 * 3.0 * (vox / 2) * (vox / 2);
    CHECK(j["chamfer_baseline_topk"].get<double>() <= bound);
}

TEST_CASE("cli: cgls dose comparison, high dose beats low dose") {
    if (cli_path().empty()) {
        MESSAGE("FOJ_CLI not set; skipping");
        return;
    }
    TempDir dir("ctdose");
    const std::string cfgpath = dir / "cfg.json";
    {
        std::ofstream f(cfgpath);
        f << R"({"tomo": {"views": 8, "phantom_dims": [16,16,16]},
                 "pgd": {"n_outer": 8}})";
    }
    auto psnr_at = [&](const std::string& tag, const std::string& photons) {
        REQUIRE(run("ct --phantom cube --method cgls --photons " + photons +
                    " --config " + cfgpath + " --seed 5 --threads 1 --output " +
                    (dir / (tag + ".bin")) + " --out-dir " + (dir / tag)) == 0);
        const auto j = nlohmann::json::parse(slurp(fs::path(dir / tag) / "metrics.json"));
        return j["psnr_db"].get<double>();
    };
    const double hi = psnr_at("hi", "1000000");
    const double lo = psnr_at("lo", "50");
    CHECK(hi > lo);
}

TEST_CASE("cli: unknown flags exit with code 1") {
    if (cli_path().empty()) {
        MESSAGE("FOJ_CLI not set; skipping");
        return;
    }
    CHECK(run("denoise --no-such-flag") == 1);
    CHECK(run("frobnicate") == 1);
}

TEST_CASE("cli: denoise reports a positive psnr gain on a noisy halfspace") {
    if (cli_path().empty()) {
        MESSAGE("FOJ_CLI not set; skipping");
        return;
    }
    TempDir dir("gain");
    const std::string clean = dir / "clean.bin";
    REQUIRE(run("phantom --kind halfspace --dims 16 --output " + clean +
                " --out-dir " + (dir / "ph")) == 0);
    // noisy input: clean + gaussian sigma 0.5
    {
        auto v = foj::read_volume(clean);
        std::mt19937_64 rng(7);
        std::normal_distribution<double> gauss(0.0, 0.5);
        for (auto& x : v.data) x += gauss(rng);
        foj::write_volume(dir / "noisy.bin", v);
    }
    const std::string cfgpath = dir / "cfg.json";
    {
        std::ofstream f(cfgpath);
        f << R"({"solver": {"patch_size": 8, "stride": 4, "n_refine": 8,
                 "angular_polar": 8, "angular_azimuth": 16}})";
    }
    REQUIRE(run("denoise --input " + (dir / "noisy.bin") + " --output " +
                (dir / "out.bin") + " --reference " + clean + " --config " +
                cfgpath + " --threads 1 --out-dir " + (dir / "run")) == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "run/metrics.json"));
    CHECK(j["psnr_gain_db"].get<double>() > 0.0);
}
