// Command-line entry points: phantom generation, direct volume denoising,
// tomographic reconstruction, and the point-cloud pipeline.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "foj/errors.hpp"
#include "foj/inverse.hpp"
#include "foj/kernels.hpp"
#include "foj/metrics.hpp"
#include "foj/parallel.hpp"
#include "foj/phantom.hpp"
#include "foj/pointcloud.hpp"
#include "foj/png_io.hpp"
#include "foj/runconfig.hpp"
#include "foj/solver.hpp"
#include "foj/state_io.hpp"
#include "foj/tomo.hpp"
#include "foj/volume.hpp"

namespace fs = std::filesystem;
using namespace foj;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadInput = 1;
constexpr int kExitNumeric = 2;

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    int threads = 0;
    std::string kernels;
    long long seed = -1;  // -1 = keep config seed
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "run-config JSON file");
    cmd->add_option("--out-dir", args.out_dir,
                    "artifact directory (default: timestamped)");
    cmd->add_option("--threads", args.threads, "worker pool size (0 = all cores)");
    cmd->add_option("--kernels", args.kernels, "force kernel set: scalar|avx2");
    cmd->add_option("--seed", args.seed, "override config seed");
}

std::string timestamp_dir() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    localtime_r(&t, &tm);
    char buf[64];
    std::strftime(buf, sizeof(buf), "foj_run_%Y%m%d_%H%M%S", &tm);
    return buf;
}

// Loads the config, applies flag overrides, prepares the artifact directory.
RunConfig setup(const CommonArgs& args) {
    RunConfig cfg = args.config_path.empty()
                        ? default_run_config()
                        : parse_run_config_file(args.config_path);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (cfg.out_dir.empty()) cfg.out_dir = timestamp_dir();
    if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
    cfg.solver.seed = cfg.seed;
    cfg.pgd.foj.seed = cfg.seed;
    if (args.threads > 0) set_num_threads(args.threads);
    if (!args.kernels.empty() && !kernels::select(args.kernels.c_str()))
        throw std::invalid_argument("unknown or unavailable kernel set: " +
                                    args.kernels);
    fs::create_directories(cfg.out_dir);
    return cfg;
}

void write_resolved_config(const RunConfig& cfg) {
    std::ofstream f(fs::path(cfg.out_dir) / "resolved_config.json");
    if (!f) throw std::runtime_error("cannot write resolved_config.json");
    f << run_config_to_json(cfg);
}

std::array<int, 3> parse_dims(const std::string& text) {
    std::stringstream ss(text);
    std::string item;
    std::vector<int> parts;
    while (std::getline(ss, item, ','))
        parts.push_back(std::stoi(item));
    if (parts.size() == 1) return {parts[0], parts[0], parts[0]};
    if (parts.size() == 3) return {parts[0], parts[1], parts[2]};
    throw std::invalid_argument("dims must be 'N' or 'D,H,W': " + text);
}

int run_phantom(const CommonArgs& common, const std::string& kind,
                const std::string& dims_text, const std::string& output) {
    RunConfig cfg = setup(common);
    if (!is_known_phantom(kind))
        throw std::invalid_argument(
            "unknown phantom kind: " + kind +
            " (valid: halfspace, wedge3, cube, shepp3d-lite)");
    const Volume v = make_phantom(kind, parse_dims(dims_text));
    write_volume(output, v);
    write_resolved_config(cfg);
    std::cout << "phantom '" << kind << "' -> " << output << "\n";
    return kExitOk;
}

int run_denoise(const CommonArgs& common, const std::string& input,
                const std::string& output, const std::string& trace_path,
                const std::string& reference) {
    RunConfig cfg = setup(common);
    if (!fs::exists(input))
        throw std::invalid_argument("input volume not found: " + input);
    const Volume noisy = read_volume(input);

    const DenoiseResult res = denoise_volume(noisy, cfg.solver);
    write_volume(output, res.denoised);

    const fs::path dir(cfg.out_dir);
    const PatchGrid grid = build_patch_grid({noisy.D, noisy.H, noisy.W},
                                            cfg.solver.patch_size,
                                            cfg.solver.stride);
    write_field_state_json((dir / "state.json").string(), res.state, grid);
    write_loss_trace_csv(trace_path.empty() ? (dir / "loss_trace.csv").string()
                                            : trace_path,
                         res.trace);
    write_mid_slices((dir / "denoised").string(), res.denoised);
    write_resolved_config(cfg);

    MetricReport report;
    report.extras["final_loss"] = res.trace.empty() ? 0.0 : res.trace.back().total;
    if (!reference.empty()) {
        const Volume ref = read_volume(reference);
        report = psnr(ref, res.denoised);
        const MetricReport in_report = psnr(ref, noisy);
        report.extras["psnr_in_db"] = in_report.psnr_db;
        report.extras["psnr_gain_db"] = report.psnr_db - in_report.psnr_db;
        std::cout << "psnr in " << in_report.psnr_db << " dB, out "
                  << report.psnr_db << " dB\n";
    }
    write_metric_report((dir / "metrics.json").string(), report);
    std::cout << "denoised -> " << output << "\n";
    return kExitOk;
}

int run_ct(const CommonArgs& common, const std::string& phantom_kind,
           const std::string& input_sino, int views_flag, double photons_flag,
           const std::string& method, const std::string& output) {
    RunConfig cfg = setup(common);
    if (views_flag >= 0) cfg.tomo.views = views_flag;
    if (photons_flag > 0) cfg.tomo.photons = photons_flag;
    if (cfg.tomo.views < 1) throw std::invalid_argument("need at least one view");
    if (method != "pgd" && method != "cgls")
        throw std::invalid_argument("method must be pgd or cgls");

    const fs::path dir(cfg.out_dir);
    Volume sino_noisy;
    ProjectorGeometry geom;
    Volume ground_truth;
    bool have_truth = false;

    if (!input_sino.empty()) {
        if (!fs::exists(input_sino))
            throw std::invalid_argument("sinogram not found: " + input_sino);
        std::tie(sino_noisy, geom) = read_sinogram(input_sino);
    } else {
        if (!is_known_phantom(phantom_kind))
            throw std::invalid_argument("unknown phantom kind: " + phantom_kind);
        ground_truth = make_phantom(phantom_kind, cfg.tomo.phantom_dims);
        have_truth = true;
        geom = make_parallel_geometry(ground_truth, cfg.tomo.views, cfg.seed);
        if (cfg.tomo.det_rows > 0) geom.det_rows = cfg.tomo.det_rows;
        if (cfg.tomo.det_cols > 0) geom.det_cols = cfg.tomo.det_cols;
        const Volume sino_clean = project(geom, ground_truth);
        sino_noisy = simulate_low_dose(
            sino_clean, {cfg.tomo.photons, cfg.seed + 1});
        write_sinogram((dir / "sinogram.bin").string(), sino_noisy, geom);
        write_volume((dir / "ground_truth.bin").string(), ground_truth);
    }

    const ProjectorOperator op(geom);
    Volume recon;
    std::vector<double> trace;
    if (method == "pgd") {
        const PgdResult res = reconstruct_pgd(op, sino_noisy, cfg.pgd);
        recon = res.x;
        trace = res.residual_trace;
    } else {
        const CglsResult res = reconstruct_lsq(op, sino_noisy, cfg.pgd.n_outer);
        recon = res.x;
        trace = res.residual_trace;
        if (res.breakdown) std::cerr << "warning: cgls breakdown, returning iterate\n";
    }

    write_volume(output, recon);
    write_residual_trace_csv((dir / "residual_trace.csv").string(), trace);
    write_mid_slices((dir / "recon").string(), recon);

    MetricReport report;
    if (have_truth) {
        report = psnr(ground_truth, recon);
        std::cout << "psnr vs phantom: " << report.psnr_db << " dB\n";
    }
    report.extras["final_residual_l2"] = trace.empty() ? 0.0 : trace.back();
    write_metric_report((dir / "metrics.json").string(), report);
    write_resolved_config(cfg);
    std::cout << "reconstruction (" << method << ") -> " << output << "\n";
    return kExitOk;
}

int run_pointcloud(const CommonArgs& common, const std::string& input,
                   const std::string& noise, double level,
                   const std::string& output, const std::string& report_path) {
    RunConfig cfg = setup(common);
    if (!fs::exists(input))
        throw std::invalid_argument("input cloud not found: " + input);
    const std::set<double> outlier_levels{0.0, 0.1, 0.3, 0.6, 0.9};
    const std::set<double> spread_levels{0.0, 40000.0, 100000.0, 200000.0,
                                         500000.0};
    if (noise == "outlier") {
        if (!outlier_levels.count(level))
            throw std::invalid_argument(
                "invalid outlier level (valid: 0, 0.1, 0.3, 0.6, 0.9)");
    } else if (noise == "spread") {
        if (!spread_levels.count(level))
            throw std::invalid_argument(
                "invalid spread level (valid: 0, 40000, 100000, 200000, 500000)");
    } else {
        throw std::invalid_argument("noise must be outlier or spread");
    }

    const PointCloud clean = read_xyz(input);
    PointCloud noisy = clean;
    if (level > 0.0) {
        noisy = noise == "outlier"
                    ? add_outlier_noise(clean, level,
                                        cfg.pointcloud.outlier_sigma, cfg.seed)
                    : add_spread_noise(clean,
                                       static_cast<std::size_t>(level),
                                       cfg.pointcloud.spread_pad, cfg.seed);
    }

    const VoxelizeResult vox = voxelize(noisy, cfg.pointcloud.grid_dim);
    const DenoiseResult den = denoise_volume(vox.volume, cfg.solver);
    int shortfall = 0;
    const PointCloud out_cloud = devoxelize_topk(den.denoised, cfg.pointcloud.topk,
                                                 vox.transform, &shortfall);
    write_xyz(output, out_cloud);

    int base_shortfall = 0;
    const PointCloud baseline = devoxelize_topk(
        vox.volume, cfg.pointcloud.topk, vox.transform, &base_shortfall);

    const fs::path dir(cfg.out_dir);
    nlohmann::json rep;
    rep["chamfer_denoised"] = chamfer_l2(out_cloud, clean);
    rep["chamfer_baseline_topk"] = chamfer_l2(baseline, clean);
    rep["input_points"] = clean.size();
    rep["noisy_points"] = noisy.size();
    rep["output_points"] = out_cloud.size();
    rep["topk_shortfall"] = shortfall;
    rep["noise"] = noise;
    rep["level"] = level;
    const std::string rpath =
        report_path.empty() ? (dir / "report.json").string() : report_path;
    std::ofstream rf(rpath);
    if (!rf) throw std::runtime_error("cannot write report: " + rpath);
    rf << rep.dump(2) << "\n";

    write_resolved_config(cfg);
    std::cout << "chamfer denoised " << rep["chamfer_denoised"]
              << ", baseline " << rep["chamfer_baseline_topk"] << " -> "
              << output << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"3D field-of-junctions volumetric denoising toolkit"};
    app.require_subcommand(1);

    CommonArgs common;

    auto* c_phantom = app.add_subcommand("phantom", "generate a synthetic volume");
    std::string ph_kind = "halfspace", ph_dims = "32", ph_out;
    c_phantom->add_option("--kind", ph_kind,
                          "halfspace|wedge3|cube|shepp3d-lite");
    c_phantom->add_option("--dims", ph_dims, "N or D,H,W");
    c_phantom->add_option("--output", ph_out, "output volume path")->required();
    add_common(c_phantom, common);

    auto* c_denoise = app.add_subcommand("denoise", "fit and denoise a volume");
    std::string dn_in, dn_out, dn_trace, dn_ref;
    c_denoise->add_option("--input", dn_in, "noisy volume")->required();
    c_denoise->add_option("--output", dn_out, "denoised volume")->required();
    c_denoise->add_option("--trace", dn_trace, "loss trace CSV path");
    c_denoise->add_option("--reference", dn_ref,
                          "clean volume for PSNR reporting");
    add_common(c_denoise, common);

    auto* c_ct = app.add_subcommand("ct", "tomographic simulate + reconstruct");
    std::string ct_phantom, ct_sino, ct_method = "pgd", ct_out;
    int ct_views = -1;
    double ct_photons = -1.0;
    c_ct->add_option("--phantom", ct_phantom, "phantom kind to simulate");
    c_ct->add_option("--input-sino", ct_sino, "measured sinogram path");
    c_ct->add_option("--views", ct_views, "number of projection angles");
    c_ct->add_option("--photons", ct_photons, "expected photons per pixel");
    c_ct->add_option("--method", ct_method, "pgd|cgls");
    c_ct->add_option("--output", ct_out, "reconstructed volume")->required();
    add_common(c_ct, common);

    auto* c_pc = app.add_subcommand("pointcloud", "denoise a point cloud");
    std::string pc_in, pc_noise = "spread", pc_out, pc_report;
    double pc_level = 0.0;
    c_pc->add_option("--input", pc_in, "clean cloud (.xyz)")->required();
    c_pc->add_option("--noise", pc_noise, "outlier|spread");
    c_pc->add_option("--level", pc_level,
                     "outlier ratio or spread point count (0 = none)");
    c_pc->add_option("--output", pc_out, "denoised cloud (.xyz)")->required();
    c_pc->add_option("--report", pc_report, "chamfer report JSON path");
    add_common(c_pc, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitBadInput;
    }

    try {
        if (c_phantom->parsed())
            return run_phantom(common, ph_kind, ph_dims, ph_out);
        if (c_denoise->parsed())
            return run_denoise(common, dn_in, dn_out, dn_trace, dn_ref);
        if (c_ct->parsed()) {
            if (ct_phantom.empty() && ct_sino.empty())
                throw std::invalid_argument("ct needs --phantom or --input-sino");
            return run_ct(common, ct_phantom, ct_sino, ct_views, ct_photons,
                          ct_method, ct_out);
        }
        if (c_pc->parsed())
            return run_pointcloud(common, pc_in, pc_noise, pc_level, pc_out,
                                  pc_report);
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadInput;
    }
    return kExitBadInput;
}
