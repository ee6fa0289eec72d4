#include "foj/metrics.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "foj/kernels.hpp"

namespace foj {

MetricReport psnr(const Volume& reference, const Volume& test) {
    if (!reference.same_dims(test))
        throw std::invalid_argument("psnr: dims mismatch");
    MetricReport r;
    r.peak = reference.max_value() - reference.min_value();
    if (r.peak <= 0.0)
        throw std::invalid_argument("psnr: constant reference has zero peak");
    r.mse = kernels::active().sum_sq_diff(reference.data.data(),
                                          test.data.data(), reference.size()) /
            static_cast<double>(reference.size());
    r.psnr_db = r.mse == 0.0
                    ? kPsnrCapDb
                    : std::min(kPsnrCapDb,
                               10.0 * std::log10(r.peak * r.peak / r.mse));
    return r;
}

void write_metric_report(const std::string& path, const MetricReport& report) {
    nlohmann::json j;
    j["psnr_db"] = report.psnr_db;
    j["mse"] = report.mse;
    j["peak"] = report.peak;
    j["peak_convention"] = "max(reference) - min(reference)";
    for (const auto& [key, value] : report.extras) j[key] = value;
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f << j.dump(2) << "\n";
}

}  // namespace foj
