#include "foj/state_io.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace foj {

void write_field_state_json(const std::string& path, const FieldState& state,
                            const PatchGrid& grid) {
    nlohmann::json j;
    j["patch_size"] = grid.patch_size;
    j["stride"] = grid.stride;
    j["dims"] = grid.dims;
    j["lambda_b"] = state.lambda_b;
    j["lambda_c"] = state.lambda_c;
    nlohmann::json patches = nlohmann::json::array();
    for (std::size_t i = 0; i < state.num_patches(); ++i) {
        const auto& p = state.params[i];
        nlohmann::json e;
        e["origin"] = grid.origins[i];
        e["vertex"] = p.vertex;
        e["angles"] = p.angles;
        nlohmann::json c = nlohmann::json::array();
        nlohmann::json live = nlohmann::json::array();
        for (int r = 0; r < p.num_regions; ++r) {
            c.push_back(state.intensities[i][r]);
            live.push_back(static_cast<bool>(state.region_live[i][r]));
        }
        e["intensities"] = c;
        e["live"] = live;
        patches.push_back(e);
    }
    j["patches"] = std::move(patches);
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f << j.dump() << "\n";
}

}  // namespace foj
