#pragma once

#include <array>
#include <string>

#include "foj/volume.hpp"

namespace foj {

// Deterministic synthetic volumes. Values lie in [0, 1]; voxel spacing is set
// to 1/max(dims) so projections of unit-density features integrate to order
// one (sane photon statistics at any grid size).
//   halfspace   : two constant half-spaces split at x = W/2
//   wedge3      : three-plane junction, three nonzero region values + zero
//   cube        : centered axis-aligned cube of side dim/2
//   shepp3d-lite: a handful of nested ellipsoids
Volume make_phantom(const std::string& kind, std::array<int, 3> dims);

bool is_known_phantom(const std::string& kind);

}  // namespace foj
