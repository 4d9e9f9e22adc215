#pragma once

#include <json.hpp>

namespace manta {

using Json = nlohmann::json;

}  // namespace manta
