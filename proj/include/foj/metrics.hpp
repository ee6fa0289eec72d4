#pragma once

#include <map>
#include <string>

#include "foj/volume.hpp"

namespace foj {

// psnr_db = 10 log10(peak^2 / mse) with peak = max(reference) - min(reference).
// An exact match reports the 99.0 dB sentinel (and every report is capped
// there). The peak convention is recorded in serialized reports.
struct MetricReport {
    double psnr_db = 0.0;
    double mse = 0.0;
    double peak = 0.0;
    std::map<std::string, double> extras;
};

inline constexpr double kPsnrCapDb = 99.0;

MetricReport psnr(const Volume& reference, const Volume& test);

void write_metric_report(const std::string& path, const MetricReport& report);

}  // namespace foj
