#include "foj/runconfig.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace foj {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& where) {
    for (const auto& [key, _] : j.items())
        if (!known.count(key))
            throw std::invalid_argument("unknown config key '" + key + "' in " +
                                        where);
}

template <typename T>
void take(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void parse_solver(const json& j, SolverConfig& s) {
    reject_unknown(j,
                   {"patch_size", "stride", "num_regions", "batch_size",
                    "n_init", "n_refine", "angular_polar", "angular_azimuth",
                    "vertex_scan_halfwidth", "vertex_scan_step", "step_size",
                    "lambda_b_target", "lambda_c_target", "ramp", "eta",
                    "delta", "seed"},
                   "solver");
    take(j, "patch_size", s.patch_size);
    take(j, "stride", s.stride);
    take(j, "num_regions", s.num_regions);
    take(j, "batch_size", s.batch_size);
    take(j, "n_init", s.n_init);
    take(j, "n_refine", s.n_refine);
    take(j, "angular_polar", s.angular_polar);
    take(j, "angular_azimuth", s.angular_azimuth);
    take(j, "vertex_scan_halfwidth", s.vertex_scan_halfwidth);
    take(j, "vertex_scan_step", s.vertex_scan_step);
    take(j, "step_size", s.step_size);
    take(j, "lambda_b_target", s.lambda_b_target);
    take(j, "lambda_c_target", s.lambda_c_target);
    take(j, "ramp", s.ramp);
    take(j, "eta", s.eta);
    take(j, "delta", s.delta);
    take(j, "seed", s.seed);
}

json solver_to_json(const SolverConfig& s) {
    return {{"patch_size", s.patch_size},
            {"stride", s.stride},
            {"num_regions", s.num_regions},
            {"batch_size", s.batch_size},
            {"n_init", s.n_init},
            {"n_refine", s.n_refine},
            {"angular_polar", s.angular_polar},
            {"angular_azimuth", s.angular_azimuth},
            {"vertex_scan_halfwidth", s.vertex_scan_halfwidth},
            {"vertex_scan_step", s.vertex_scan_step},
            {"step_size", s.step_size},
            {"lambda_b_target", s.lambda_b_target},
            {"lambda_c_target", s.lambda_c_target},
            {"ramp", s.ramp},
            {"eta", s.eta},
            {"delta", s.delta},
            {"seed", s.seed}};
}

}  // namespace

RunConfig default_run_config() { return RunConfig{}; }

RunConfig parse_run_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    reject_unknown(j, {"solver", "pgd", "tomo", "pointcloud", "io", "seed"},
                   "config root");
    RunConfig cfg;
    if (j.contains("solver")) parse_solver(j["solver"], cfg.solver);
    if (j.contains("pgd")) {
        const auto& p = j["pgd"];
        reject_unknown(p, {"lambda", "n_outer", "warm_start", "foj"}, "pgd");
        take(p, "lambda", cfg.pgd.lambda);
        take(p, "n_outer", cfg.pgd.n_outer);
        take(p, "warm_start", cfg.pgd.warm_start);
        if (p.contains("foj")) parse_solver(p["foj"], cfg.pgd.foj);
    }
    if (j.contains("tomo")) {
        const auto& t = j["tomo"];
        reject_unknown(t, {"views", "photons", "det_rows", "det_cols",
                           "phantom_dims"},
                       "tomo");
        take(t, "views", cfg.tomo.views);
        take(t, "photons", cfg.tomo.photons);
        take(t, "det_rows", cfg.tomo.det_rows);
        take(t, "det_cols", cfg.tomo.det_cols);
        if (t.contains("phantom_dims")) {
            const auto& d = t["phantom_dims"];
            if (!d.is_array() || d.size() != 3)
                throw std::invalid_argument("tomo.phantom_dims must be [D,H,W]");
            for (int a = 0; a < 3; ++a)
                cfg.tomo.phantom_dims[a] = d[a].get<int>();
        }
    }
    if (j.contains("pointcloud")) {
        const auto& p = j["pointcloud"];
        reject_unknown(p, {"grid_dim", "topk", "outlier_sigma", "spread_pad"},
                       "pointcloud");
        take(p, "grid_dim", cfg.pointcloud.grid_dim);
        take(p, "topk", cfg.pointcloud.topk);
        take(p, "outlier_sigma", cfg.pointcloud.outlier_sigma);
        take(p, "spread_pad", cfg.pointcloud.spread_pad);
    }
    if (j.contains("io")) {
        const auto& io = j["io"];
        reject_unknown(io, {"out_dir"}, "io");
        take(io, "out_dir", cfg.out_dir);
    }
    take(j, "seed", cfg.seed);
    return cfg;
}

RunConfig parse_run_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open config: " + path);
    std::string text((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
    return parse_run_config_text(text);
}

std::string run_config_to_json(const RunConfig& cfg) {
    json j;
    j["solver"] = solver_to_json(cfg.solver);
    j["pgd"] = {{"lambda", cfg.pgd.lambda},
                {"n_outer", cfg.pgd.n_outer},
                {"warm_start", cfg.pgd.warm_start},
                {"foj", solver_to_json(cfg.pgd.foj)}};
    j["tomo"] = {{"views", cfg.tomo.views},
                 {"photons", cfg.tomo.photons},
                 {"det_rows", cfg.tomo.det_rows},
                 {"det_cols", cfg.tomo.det_cols},
                 {"phantom_dims", cfg.tomo.phantom_dims}};
    j["pointcloud"] = {{"grid_dim", cfg.pointcloud.grid_dim},
                       {"topk", cfg.pointcloud.topk},
                       {"outlier_sigma", cfg.pointcloud.outlier_sigma},
                       {"spread_pad", cfg.pointcloud.spread_pad}};
    j["io"] = {{"out_dir", cfg.out_dir}};
    j["seed"] = cfg.seed;
    return j.dump(2) + "\n";
}

}  // namespace foj
