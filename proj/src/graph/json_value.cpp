#include "kbrl/graph/json_value.hpp"

#include "kbrl/error.hpp"

namespace kbrl {

nlohmann::json to_json(const Value& value) {
    switch (value.kind()) {
        case ValueKind::Boolean: return value.as_bool();
        case ValueKind::Integer: return value.as_int();
        case ValueKind::Float: return value.as_float();
        case ValueKind::String: return value.as_string();
        case ValueKind::List: {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& item : value.as_list()) arr.push_back(to_json(item));
            return arr;
        }
    }
    return nullptr;
}

Value from_json(const nlohmann::json& j) {
    if (j.is_boolean()) return Value(j.get<bool>());
    if (j.is_number_integer()) return Value(j.get<std::int64_t>());
    if (j.is_number_float()) return Value(j.get<double>());
    if (j.is_string()) return Value(j.get<std::string>());
    if (j.is_array()) {
        Value::List items;
        for (const auto& item : j) {
            if (item.is_array()) throw SchemaError("nested lists are not supported");
            items.push_back(from_json(item));
        }
        return Value(std::move(items));
    }
    throw SchemaError("unsupported JSON value: " + j.dump());
}

}  // namespace kbrl
