#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"
#include "oocs/kernel.hpp"

namespace oocs {

/// {"spec": {...}, "derivation": {...}, "polarity": "on", "weights": nested [z][y][x] (or [y][x])}
nlohmann::json kernel_to_json(const BalancedKernel& kernel);
BalancedKernel kernel_from_json(const nlohmann::json& j);

/// Flat "x,y,z,weight" CSV with signed offsets; z is 0 for 2D kernels.
void write_kernel_csv(const BalancedKernel& kernel, std::ostream& out);

}  // namespace oocs
