#include "kbrl/graph/ontology.hpp"

#include <cctype>

#include "kbrl/error.hpp"

namespace kbrl::graph {

std::string to_string(AttributeKind kind) {
    std::string base;
    switch (kind.scalar) {
        case ScalarKind::String: base = "string"; break;
        case ScalarKind::Integer: base = "integer"; break;
        case ScalarKind::Float: base = "float"; break;
        case ScalarKind::Boolean: base = "boolean"; break;
    }
    return kind.list ? "list<" + base + ">" : base;
}

void Ontology::add_entity(std::string name) { entities_.insert(std::move(name)); }

void Ontology::add_verb(VerbDecl verb) {
    if (!has_entity(verb.from)) throw SchemaError("verb '" + verb.name + "' references undeclared type '" + verb.from + "'");
    if (!has_entity(verb.to)) throw SchemaError("verb '" + verb.name + "' references undeclared type '" + verb.to + "'");
    std::string key = verb.name;
    verbs_[key] = std::move(verb);
}

void Ontology::add_attribute(std::string entity, std::string attribute, AttributeKind kind) {
    if (!has_entity(entity)) {
        throw SchemaError("attribute '" + attribute + "' references undeclared type '" + entity + "'");
    }
    attributes_[{std::move(entity), std::move(attribute)}] = kind;
}

bool Ontology::has_entity(std::string_view name) const { return entities_.find(name) != entities_.end(); }

const VerbDecl* Ontology::verb(std::string_view name) const {
    auto it = verbs_.find(name);
    return it == verbs_.end() ? nullptr : &it->second;
}

std::optional<AttributeKind> Ontology::attribute(std::string_view entity, std::string_view attribute) const {
    auto it = attributes_.find(AttributeKey{std::string(entity), std::string(attribute)});
    if (it == attributes_.end()) return std::nullopt;
    return it->second;
}

namespace {

std::optional<Value> conform_scalar(ScalarKind kind, const Value& v) {
    switch (kind) {
        case ScalarKind::String:
            if (v.kind() == ValueKind::String) return v;
            break;
        case ScalarKind::Integer:
            if (v.kind() == ValueKind::Integer) return v;
            break;
        case ScalarKind::Float:
            if (v.kind() == ValueKind::Float) return v;
            if (v.kind() == ValueKind::Integer) return Value(static_cast<double>(v.as_int()));
            break;
        case ScalarKind::Boolean:
            if (v.kind() == ValueKind::Boolean) return v;
            break;
    }
    return std::nullopt;
}

}  // namespace

Value Ontology::conform(std::string_view entity, std::string_view attr, Value value) const {
    auto kind = attribute(entity, attr);
    if (!kind) {
        throw SchemaError("attribute '" + std::string(attr) + "' is not declared for type '" + std::string(entity) + "'");
    }
    auto mismatch = [&] {
        return SchemaError("attribute '" + std::string(entity) + "." + std::string(attr) + "' expects " +
                           to_string(*kind) + ", got " + std::string(to_string(value.kind())));
    };
    if (kind->list) {
        if (value.kind() != ValueKind::List) throw mismatch();
        Value::List out;
        out.reserve(value.as_list().size());
        for (const auto& item : value.as_list()) {
            auto c = conform_scalar(kind->scalar, item);
            if (!c) throw mismatch();
            out.push_back(std::move(*c));
        }
        return Value(std::move(out));
    }
    auto c = conform_scalar(kind->scalar, value);
    if (!c) throw mismatch();
    return std::move(*c);
}

// ---------------------------------------------------------------------------
// Turtle subset

namespace {

struct Token {
    enum class Type { Prefix, PNameNs, Iri, PName, A, Dot, Semicolon, Comma, End };
    Type type;
    std::string text;    // PName: mapped name; PNameNs: prefix label
    std::string prefix;  // PName only
    std::string local;   // PName only
    std::size_t line;
    std::size_t column;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next() {
        skip_space();
        Token t{Token::Type::End, {}, {}, {}, line_, col_};
        if (pos_ >= src_.size()) return t;
        char c = src_[pos_];
        if (c == '.') return single(Token::Type::Dot);
        if (c == ';') return single(Token::Type::Semicolon);
        if (c == ',') return single(Token::Type::Comma);
        if (c == '<') {
            advance();
            std::string iri;
            while (pos_ < src_.size() && src_[pos_] != '>') {
                if (src_[pos_] == '\n' || std::isspace(static_cast<unsigned char>(src_[pos_]))) {
                    throw SyntaxError("whitespace inside IRI", line_, col_);
                }
                iri.push_back(src_[pos_]);
                advance();
            }
            if (pos_ >= src_.size()) throw SyntaxError("unterminated IRI", t.line, t.column);
            advance();
            t.type = Token::Type::Iri;
            t.text = std::move(iri);
            return t;
        }
        if (c == '@') {
            advance();
            std::string word = read_name();
            if (word != "prefix") throw SyntaxError("unsupported directive '@" + word + "'", t.line, t.column);
            t.type = Token::Type::Prefix;
            return t;
        }
        if (c == ':' || std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string first = read_name();
            if (pos_ < src_.size() && src_[pos_] == ':') {
                advance();
                std::string local = read_name();
                if (local.empty()) {
                    t.type = Token::Type::PNameNs;
                    t.text = first;
                    return t;
                }
                t.type = Token::Type::PName;
                t.prefix = first;
                t.local = local;
                t.text = first.empty() ? local : first + "/" + local;
                return t;
            }
            if (first == "a") {
                t.type = Token::Type::A;
                return t;
            }
            throw SyntaxError("expected prefixed name, got '" + first + "'", t.line, t.column);
        }
        throw SyntaxError(std::string("unexpected character '") + c + "'", t.line, t.column);
    }

private:
    Token single(Token::Type type) {
        Token t{type, {}, {}, {}, line_, col_};
        advance();
        return t;
    }

    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_space() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    std::string read_name() {
        std::string out;
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') {
                out.push_back(c);
                advance();
            } else {
                break;
            }
        }
        return out;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;
};

struct TermInfo {
    std::vector<std::string> types;  // vocabulary local names after `a`
    std::vector<std::pair<std::string, std::size_t>> domains;  // (term, line)
    std::vector<std::pair<std::string, std::size_t>> ranges;
    std::size_t line = 0;
};

class TurtleParser {
public:
    explicit TurtleParser(std::string_view text) : lex_(text) { tok_ = lex_.next(); }

    Ontology parse() {
        while (tok_.type != Token::Type::End) {
            if (tok_.type == Token::Type::Prefix) {
                directive();
            } else {
                statement();
            }
        }
        return resolve();
    }

private:
    [[noreturn]] void fail(const std::string& what) const { throw SyntaxError(what, tok_.line, tok_.column); }

    void expect(Token::Type type, const char* what) {
        if (tok_.type != type) fail(std::string("expected ") + what);
        tok_ = lex_.next();
    }

    void directive() {
        tok_ = lex_.next();
        if (tok_.type != Token::Type::PNameNs) fail("expected prefix label after @prefix");
        std::string label = tok_.text;
        tok_ = lex_.next();
        if (tok_.type != Token::Type::Iri) fail("expected IRI in @prefix");
        prefixes_[label] = tok_.text;
        tok_ = lex_.next();
        expect(Token::Type::Dot, "'.' after @prefix");
    }

    // Returns the mapped name; vocabulary terms come back as "kb:<local>".
    std::string term(bool allow_vocab) {
        if (tok_.type != Token::Type::PName) fail("expected prefixed name");
        if (!prefixes_.count(tok_.prefix)) fail("undeclared prefix '" + tok_.prefix + ":'");
        std::string out;
        if (tok_.prefix == "kb") {
            if (!allow_vocab) fail("vocabulary term 'kb:" + tok_.local + "' used as subject");
            out = "kb:" + tok_.local;
        } else {
            out = tok_.text;
        }
        tok_ = lex_.next();
        return out;
    }

    void statement() {
        std::size_t line = tok_.line;
        std::string subject = term(false);
        TermInfo& info = terms_[subject];
        if (info.line == 0) {
            info.line = line;
            order_.push_back(subject);
        }
        for (;;) {
            std::string predicate;
            std::size_t pline = tok_.line, pcol = tok_.column;
            if (tok_.type == Token::Type::A) {
                predicate = "a";
                tok_ = lex_.next();
            } else {
                predicate = term(true);
            }
            if (predicate != "a" && predicate != "kb:domain" && predicate != "kb:range") {
                throw SyntaxError("unsupported predicate '" + predicate + "'", pline, pcol);
            }
            for (;;) {
                std::size_t oline = tok_.line, ocol = tok_.column;
                std::string object = term(true);
                if (predicate == "a") {
                    if (object != "kb:Entity" && object != "kb:Verb" && object != "kb:Attribute") {
                        throw SyntaxError("unsupported type '" + object + "'", oline, ocol);
                    }
                    info.types.push_back(object.substr(3));
                } else if (predicate == "kb:domain") {
                    info.domains.emplace_back(object, oline);
                } else {
                    info.ranges.emplace_back(object, oline);
                }
                if (tok_.type != Token::Type::Comma) break;
                tok_ = lex_.next();
            }
            if (tok_.type == Token::Type::Semicolon) {
                tok_ = lex_.next();
                if (tok_.type == Token::Type::Dot) break;
                continue;
            }
            break;
        }
        expect(Token::Type::Dot, "'.' at end of statement");
    }

    static std::optional<AttributeKind> datatype(const std::string& term) {
        static const std::map<std::string, AttributeKind> kinds = {
            {"kb:string", {ScalarKind::String, false}},      {"kb:integer", {ScalarKind::Integer, false}},
            {"kb:float", {ScalarKind::Float, false}},        {"kb:boolean", {ScalarKind::Boolean, false}},
            {"kb:stringList", {ScalarKind::String, true}},   {"kb:integerList", {ScalarKind::Integer, true}},
            {"kb:floatList", {ScalarKind::Float, true}},     {"kb:booleanList", {ScalarKind::Boolean, true}},
        };
        auto it = kinds.find(term);
        if (it == kinds.end()) return std::nullopt;
        return it->second;
    }

    static std::string at_line(std::size_t line) { return " (line " + std::to_string(line) + ")"; }

    Ontology resolve() {
        Ontology onto;
        for (const auto& name : order_) {
            const TermInfo& info = terms_.at(name);
            if (info.types.empty()) throw SchemaError("term '" + name + "' has no type" + at_line(info.line));
            if (info.types.size() > 1) throw SchemaError("term '" + name + "' has several types" + at_line(info.line));
            if (info.types[0] == "Entity") {
                if (!info.domains.empty() || !info.ranges.empty()) {
                    throw SchemaError("entity '" + name + "' cannot have domain or range" + at_line(info.line));
                }
                onto.add_entity(name);
            }
        }
        auto require_entity = [&](const std::pair<std::string, std::size_t>& ref, const std::string& owner) {
            if (!onto.has_entity(ref.first)) {
                throw SchemaError("'" + owner + "' references undeclared type '" + ref.first + "'" + at_line(ref.second));
            }
        };
        for (const auto& name : order_) {
            const TermInfo& info = terms_.at(name);
            if (info.types[0] == "Verb") {
                if (info.domains.size() != 1 || info.ranges.size() != 1) {
                    throw SchemaError("verb '" + name + "' needs exactly one domain and one range" + at_line(info.line));
                }
                require_entity(info.domains[0], name);
                require_entity(info.ranges[0], name);
                onto.add_verb({name, info.domains[0].first, info.ranges[0].first});
            } else if (info.types[0] == "Attribute") {
                if (info.domains.empty() || info.ranges.size() != 1) {
                    throw SchemaError("attribute '" + name + "' needs a domain and exactly one range" + at_line(info.line));
                }
                auto kind = datatype(info.ranges[0].first);
                if (!kind) {
                    throw SchemaError("attribute '" + name + "' has unknown range '" + info.ranges[0].first + "'" +
                                      at_line(info.ranges[0].second));
                }
                for (const auto& d : info.domains) {
                    require_entity(d, name);
                    onto.add_attribute(d.first, name, *kind);
                }
            }
        }
        return onto;
    }

    Lexer lex_;
    Token tok_;
    std::map<std::string, std::string> prefixes_;
    std::map<std::string, TermInfo> terms_;
    std::vector<std::string> order_;
};

}  // namespace

Ontology load_ontology(std::string_view text) { return TurtleParser(text).parse(); }

}  // namespace kbrl::graph
