#pragma once

#include <json.hpp>

#include "ulang/potential.hpp"

namespace ulang {

// JSON-object form of the config loader (the string form lives in potential.hpp).
Potential load_potential(const nlohmann::json& j);

}  // namespace ulang
