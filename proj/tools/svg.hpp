#pragma once

#include <string>
#include <vector>

#include "crosswatch/archive.hpp"
#include "crosswatch/nearmiss.hpp"

namespace crosswatch::svg {

// Static overlay of track trajectories and near-accident regions: one
// polyline per track (color keyed to the id), one outlined rectangle per
// event. Bounds come from the data itself, padded a little.
std::string render(const TrackArchive& archive,
                   const std::vector<nearmiss::NearAccidentEvent>& events);

} // namespace crosswatch::svg
