#include "kbrl/graph/value.hpp"

#include <charconv>
#include <cmath>

#include "kbrl/error.hpp"

namespace kbrl {

std::string_view to_string(ValueKind kind) {
    switch (kind) {
        case ValueKind::Boolean: return "boolean";
        case ValueKind::Integer: return "integer";
        case ValueKind::Float: return "float";
        case ValueKind::String: return "string";
        case ValueKind::List: return "list";
    }
    return "?";
}

std::string_view to_string(CompareOp op) {
    switch (op) {
        case CompareOp::Eq: return "==";
        case CompareOp::Ne: return "!=";
        case CompareOp::Lt: return "<";
        case CompareOp::Le: return "<=";
        case CompareOp::Gt: return ">";
        case CompareOp::Ge: return ">=";
        case CompareOp::In: return "in";
    }
    return "?";
}

double Value::as_number() const {
    if (kind() == ValueKind::Integer) return static_cast<double>(as_int());
    return as_float();
}

std::string format_double(double d) {
    if (std::isnan(d)) return "nan";
    if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), d);
    std::string out(buf, res.ptr);
    if (out.find_first_of(".eE") == std::string::npos) out += ".0";
    return out;
}

std::string quote_string(std::string_view s) {
    std::string out;
    out.reserve(s.size() + 2);
    out.push_back('"');
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out.push_back(c);
        }
    }
    out.push_back('"');
    return out;
}

namespace {

std::string render(const Value& v, bool as_literal) {
    switch (v.kind()) {
        case ValueKind::Boolean: return v.as_bool() ? "true" : "false";
        case ValueKind::Integer: return std::to_string(v.as_int());
        case ValueKind::Float: return format_double(v.as_float());
        case ValueKind::String: return as_literal ? quote_string(v.as_string()) : v.as_string();
        case ValueKind::List: {
            std::string out = "[";
            bool first = true;
            for (const auto& item : v.as_list()) {
                if (!first) out += ", ";
                first = false;
                out += render(item, as_literal);
            }
            return out + "]";
        }
    }
    return {};
}

[[noreturn]] void incompatible(const Value& a, CompareOp op, const Value& b) {
    throw EvaluationError("cannot compare " + std::string(to_string(a.kind())) + " " +
                          std::string(to_string(op)) + " " + std::string(to_string(b.kind())));
}

bool equal_values(const Value& a, const Value& b) {
    if (a.is_numeric() && b.is_numeric()) {
        if (a.kind() == ValueKind::Integer && b.kind() == ValueKind::Integer) return a.as_int() == b.as_int();
        return a.as_number() == b.as_number();
    }
    if (a.kind() != b.kind()) incompatible(a, CompareOp::Eq, b);
    switch (a.kind()) {
        case ValueKind::Boolean: return a.as_bool() == b.as_bool();
        case ValueKind::String: return a.as_string() == b.as_string();
        case ValueKind::List: {
            const auto& la = a.as_list();
            const auto& lb = b.as_list();
            if (la.size() != lb.size()) return false;
            for (std::size_t i = 0; i < la.size(); ++i) {
                if (!equal_values(la[i], lb[i])) return false;
            }
            return true;
        }
        default: return false;
    }
}

}  // namespace

std::string Value::display() const { return render(*this, false); }
std::string Value::literal() const { return render(*this, true); }

std::strong_ordering operator<=>(const Value& a, const Value& b) {
    if (a.data_.index() != b.data_.index()) return a.data_.index() <=> b.data_.index();
    switch (a.kind()) {
        case ValueKind::Boolean: return a.as_bool() <=> b.as_bool();
        case ValueKind::Integer: return a.as_int() <=> b.as_int();
        case ValueKind::Float: {
            // NaN never appears in graph payloads; order it last to stay total.
            double x = a.as_float(), y = b.as_float();
            if (x < y) return std::strong_ordering::less;
            if (x > y) return std::strong_ordering::greater;
            if (x == y) return std::strong_ordering::equal;
            return std::isnan(x) ? (std::isnan(y) ? std::strong_ordering::equal : std::strong_ordering::greater)
                                 : std::strong_ordering::less;
        }
        case ValueKind::String: return a.as_string().compare(b.as_string()) <=> 0;
        case ValueKind::List: {
            const auto& la = a.as_list();
            const auto& lb = b.as_list();
            for (std::size_t i = 0; i < la.size() && i < lb.size(); ++i) {
                if (auto c = la[i] <=> lb[i]; c != 0) return c;
            }
            return la.size() <=> lb.size();
        }
    }
    return std::strong_ordering::equal;
}

bool compare_values(const Value& lhs, CompareOp op, const Value& rhs) {
    switch (op) {
        case CompareOp::Eq: return equal_values(lhs, rhs);
        case CompareOp::Ne: return !equal_values(lhs, rhs);
        case CompareOp::In: {
            if (rhs.kind() != ValueKind::List || lhs.kind() == ValueKind::List) incompatible(lhs, op, rhs);
            for (const auto& item : rhs.as_list()) {
                if (equal_values(lhs, item)) return true;
            }
            return false;
        }
        case CompareOp::Lt:
        case CompareOp::Le:
        case CompareOp::Gt:
        case CompareOp::Ge: {
            int c = 0;
            if (lhs.is_numeric() && rhs.is_numeric()) {
                if (lhs.kind() == ValueKind::Integer && rhs.kind() == ValueKind::Integer) {
                    c = lhs.as_int() < rhs.as_int() ? -1 : (lhs.as_int() > rhs.as_int() ? 1 : 0);
                } else {
                    double x = lhs.as_number(), y = rhs.as_number();
                    c = x < y ? -1 : (x > y ? 1 : 0);
                }
            } else if (lhs.kind() == ValueKind::String && rhs.kind() == ValueKind::String) {
                int r = lhs.as_string().compare(rhs.as_string());
                c = r < 0 ? -1 : (r > 0 ? 1 : 0);
            } else {
                incompatible(lhs, op, rhs);
            }
            if (op == CompareOp::Lt) return c < 0;
            if (op == CompareOp::Le) return c <= 0;
            if (op == CompareOp::Gt) return c > 0;
            return c >= 0;
        }
    }
    return false;
}

}  // namespace kbrl
