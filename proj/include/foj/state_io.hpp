#pragma once

#include <string>

#include "foj/objective.hpp"

namespace foj {

// JSON snapshot of the fitted junction field: per-patch vertex, plane angles,
// region intensities and live flags (the global fields are reproducible from
// these and are not stored).
void write_field_state_json(const std::string& path, const FieldState& state,
                            const PatchGrid& grid);

}  // namespace foj
