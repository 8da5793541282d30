#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace kbrl {

enum class ValueKind { Boolean, Integer, Float, String, List };

std::string_view to_string(ValueKind kind);

// Scalar or homogeneous list of scalars, the attribute payload of graph nodes
// and Issue entries. Equality is structural (Integer 1 differs from Float 1.0);
// use compare_values() for the numeric-aware rule semantics.
class Value {
public:
    using List = std::vector<Value>;

    Value() : data_(false) {}
    Value(bool b) : data_(b) {}
    Value(int i) : data_(static_cast<std::int64_t>(i)) {}
    Value(std::int64_t i) : data_(i) {}
    Value(double d) : data_(d) {}
    Value(std::string s) : data_(std::move(s)) {}
    Value(const char* s) : data_(std::string(s)) {}
    Value(List items) : data_(std::move(items)) {}

    ValueKind kind() const noexcept { return static_cast<ValueKind>(data_.index()); }
    bool is_numeric() const noexcept {
        return kind() == ValueKind::Integer || kind() == ValueKind::Float;
    }

    bool as_bool() const { return std::get<bool>(data_); }
    std::int64_t as_int() const { return std::get<std::int64_t>(data_); }
    double as_float() const { return std::get<double>(data_); }
    const std::string& as_string() const { return std::get<std::string>(data_); }
    const List& as_list() const { return std::get<List>(data_); }

    // Integer or Float widened to double.
    double as_number() const;

    // Human-facing text: strings unquoted, floats in shortest round-trip form.
    std::string display() const;
    // Source-literal text: strings quoted and escaped, floats always carry '.' or 'e'.
    std::string literal() const;

    friend bool operator==(const Value&, const Value&) = default;
    // Total order (kind first) so values can key ordered containers.
    friend std::strong_ordering operator<=>(const Value& a, const Value& b);

private:
    std::variant<bool, std::int64_t, double, std::string, List> data_;
};

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge, In };

std::string_view to_string(CompareOp op);

// Rule-language comparison. Integers and floats compare numerically; strings
// compare lexicographically; booleans and lists support only == and !=; `in`
// needs a list on the right. Anything else throws EvaluationError.
bool compare_values(const Value& lhs, CompareOp op, const Value& rhs);

// Shortest decimal form that parses back to the same double, always with a
// '.' or exponent so it reads as a float literal.
std::string format_double(double d);

std::string quote_string(std::string_view s);

}  // namespace kbrl
