#pragma once

#include <json.hpp>

#include "kbrl/graph/value.hpp"

namespace kbrl {

nlohmann::json to_json(const Value& value);
// Integers stay integers and non-integral numbers become floats; null and
// objects are rejected.
Value from_json(const nlohmann::json& j);

}  // namespace kbrl
