#pragma once

#include <string>

#include "phsfl/layers.hpp"

namespace phsfl {

/// Model checkpoint: magic "PHSFL1", layer specs, then the flat
/// little-endian 64-bit parameter array. Round-trips bit-exactly.
void save_model(const LayeredModel& model, const std::string& path);
LayeredModel load_model(const std::string& path);

}  // namespace phsfl
