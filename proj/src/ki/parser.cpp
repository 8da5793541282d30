#include "kbrl/ki/parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace kbrl::ki {

std::string_view to_string(KiErrorKind kind) {
    switch (kind) {
        case KiErrorKind::Syntax: return "syntax error";
        case KiErrorKind::UnboundVariable: return "unbound variable";
        case KiErrorKind::EmptyDo: return "empty do block";
        case KiErrorKind::MissingOn: return "empty on block";
        case KiErrorKind::DuplicateName: return "duplicate rule name";
    }
    return "error";
}

KiError::KiError(KiErrorKind kind, std::string source, std::string block, const std::string& message,
                 std::size_t line, std::size_t column)
    : SyntaxError(source + ": " + std::string(to_string(kind)) + (block.empty() ? "" : " in " + block + " block") +
                      ": " + message,
                  line, column),
      kind_(kind), source_(std::move(source)), block_(std::move(block)) {}

namespace {

struct Token {
    enum class Type { Ident, Var, String, Integer, Float, Punct, End };
    Type type = Type::End;
    std::string text;  // identifier / var name / decoded string / punct / number text
    std::size_t line = 1;
    std::size_t column = 1;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '/';
}
bool var_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Lexer {
public:
    Lexer(std::string_view src, std::string source) : src_(src), source_(std::move(source)) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip();
            Token t;
            t.line = line_;
            t.column = col_;
            if (pos_ >= src_.size()) {
                out.push_back(t);
                return out;
            }
            char c = src_[pos_];
            if (ident_start(c)) {
                t.type = Token::Type::Ident;
                while (pos_ < src_.size() && ident_char(src_[pos_])) t.text.push_back(get());
            } else if (c == '$') {
                get();
                t.type = Token::Type::Var;
                if (pos_ >= src_.size() || !ident_start(src_[pos_])) fail("expected variable name after '$'", t);
                while (pos_ < src_.size() && var_char(src_[pos_])) t.text.push_back(get());
            } else if (c == '"') {
                get();
                t.type = Token::Type::String;
                for (;;) {
                    if (pos_ >= src_.size()) fail("unterminated string", t);
                    char s = get();
                    if (s == '"') break;
                    if (s == '\n') fail("newline in string", t);
                    if (s == '\\') {
                        if (pos_ >= src_.size()) fail("unterminated escape", t);
                        char e = get();
                        switch (e) {
                            case 'n': t.text.push_back('\n'); break;
                            case 't': t.text.push_back('\t'); break;
                            case '"': t.text.push_back('"'); break;
                            case '\\': t.text.push_back('\\'); break;
                            default: fail(std::string("unknown escape '\\") + e + "'", t);
                        }
                    } else {
                        t.text.push_back(s);
                    }
                }
            } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                       (c == '-' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
                t.type = Token::Type::Integer;
                t.text.push_back(get());
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) t.text.push_back(get());
                if (pos_ + 1 < src_.size() && src_[pos_] == '.' && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
                    t.type = Token::Type::Float;
                    t.text.push_back(get());
                    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) t.text.push_back(get());
                }
                if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
                    t.type = Token::Type::Float;
                    t.text.push_back(get());
                    if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) t.text.push_back(get());
                    if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                        fail("malformed exponent", t);
                    }
                    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) t.text.push_back(get());
                }
                if (pos_ < src_.size() && ident_char(src_[pos_]) && src_[pos_] != '-') fail("malformed number", t);
            } else {
                t.type = Token::Type::Punct;
                static const char* two[] = {"==", "!=", "<=", ">="};
                bool matched = false;
                for (const char* op : two) {
                    if (src_.substr(pos_, 2) == op) {
                        t.text = op;
                        get();
                        get();
                        matched = true;
                        break;
                    }
                }
                if (!matched) {
                    if (std::string_view("{}[](),.=;<>").find(c) == std::string_view::npos) {
                        fail(std::string("unexpected character '") + c + "'", t);
                    }
                    t.text = std::string(1, get());
                }
            }
            out.push_back(std::move(t));
        }
    }

private:
    [[noreturn]] void fail(const std::string& msg, const Token& at) const {
        throw KiError(KiErrorKind::Syntax, source_, "", msg, at.line, at.column);
    }

    char get() {
        char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    void skip() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '#' || (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/')) {
                while (pos_ < src_.size() && src_[pos_] != '\n') get();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                get();
            } else {
                break;
            }
        }
    }

    std::string_view src_;
    std::string source_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;
};

std::optional<CompareOp> op_from(const Token& t) {
    if (t.type == Token::Type::Punct) {
        if (t.text == "==") return CompareOp::Eq;
        if (t.text == "!=") return CompareOp::Ne;
        if (t.text == "<") return CompareOp::Lt;
        if (t.text == "<=") return CompareOp::Le;
        if (t.text == ">") return CompareOp::Gt;
        if (t.text == ">=") return CompareOp::Ge;
    }
    if (t.type == Token::Type::Ident && t.text == "in") return CompareOp::In;
    return std::nullopt;
}

class Parser {
public:
    Parser(std::vector<Token> tokens, std::string source) : toks_(std::move(tokens)), source_(std::move(source)) {}

    bool at_end() const { return peek().type == Token::Type::End; }

    KnowledgeItem rule() {
        node_vars_.clear();
        scalar_vars_.clear();
        KnowledgeItem ki;

        block_ = "ki";
        expect_keyword("ki");
        const Token& name = peek();
        if (name.type != Token::Type::Ident && name.type != Token::Type::String) fail("expected rule name");
        ki.name = name.text;
        if (ki.name.empty()) fail("rule name must not be empty");
        advance();
        expect_punct("{");
        while (!is_punct("}")) {
            if (peek().type != Token::Type::Ident) fail("expected metadata key");
            std::string key = advance().text;
            expect_punct("=");
            Operand v = operand(false);
            if (v.kind != Operand::Kind::Literal) fail("metadata values must be literals");
            ki.meta.emplace_back(std::move(key), std::move(v.literal));
            accept_punct(";");
        }
        advance();

        block_ = "on";
        const Token on_tok = peek();
        expect_keyword("on");
        expect_punct("{");
        while (!is_punct("}")) ki.on.push_back(clause());
        advance();
        if (ki.on.empty()) {
            throw KiError(KiErrorKind::MissingOn, source_, block_, "at least one match clause is required", on_tok.line,
                          on_tok.column);
        }

        block_ = "when";
        expect_keyword("when");
        expect_punct("{");
        if (is_punct("}")) {
            ki.when = Expr{};
        } else {
            ki.when = expr();
        }
        expect_punct("}");

        block_ = "do";
        const Token do_tok = peek();
        expect_keyword("do");
        expect_punct("{");
        while (!is_punct("}")) {
            ki.actions.push_back(statement());
            accept_punct(";");
        }
        advance();
        if (ki.actions.empty()) {
            throw KiError(KiErrorKind::EmptyDo, source_, block_, "a rule needs at least one action", do_tok.line,
                          do_tok.column);
        }
        return ki;
    }

private:
    const Token& peek(std::size_t ahead = 0) const {
        std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
        return toks_[i];
    }
    const Token& advance() {
        const Token& t = toks_[pos_];
        if (pos_ + 1 < toks_.size()) ++pos_;
        return t;
    }
    bool is_punct(std::string_view p, std::size_t ahead = 0) const {
        return peek(ahead).type == Token::Type::Punct && peek(ahead).text == p;
    }
    bool is_keyword(std::string_view k, std::size_t ahead = 0) const {
        return peek(ahead).type == Token::Type::Ident && peek(ahead).text == k;
    }
    [[noreturn]] void fail(const std::string& msg) const { fail_at(KiErrorKind::Syntax, msg, peek()); }
    [[noreturn]] void fail_at(KiErrorKind kind, const std::string& msg, const Token& t) const {
        throw KiError(kind, source_, block_, msg, t.line, t.column);
    }
    void expect_punct(std::string_view p) {
        if (!is_punct(p)) fail("expected '" + std::string(p) + "'" + found());
        advance();
    }
    void expect_keyword(std::string_view k) {
        if (!is_keyword(k)) fail("expected '" + std::string(k) + "'" + found());
        advance();
    }
    bool accept_punct(std::string_view p) {
        if (!is_punct(p)) return false;
        advance();
        return true;
    }
    std::string found() const {
        const Token& t = peek();
        if (t.type == Token::Type::End) return ", found end of input";
        return ", found '" + t.text + "'";
    }
    std::string ident(const char* what) {
        if (peek().type != Token::Type::Ident) fail(std::string("expected ") + what + found());
        return advance().text;
    }

    bool is_bound(const std::string& v) const { return node_vars_.count(v) || scalar_vars_.count(v); }

    void require_bound(const Operand& o, const Token& at) const {
        switch (o.kind) {
            case Operand::Kind::Var:
                if (!is_bound(o.name)) fail_at(KiErrorKind::UnboundVariable, "$" + o.name + " is not bound", at);
                break;
            case Operand::Kind::NodeAttr:
                if (!node_vars_.count(o.name)) {
                    fail_at(KiErrorKind::UnboundVariable, "$" + o.name + " is not a bound node variable", at);
                }
                break;
            case Operand::Kind::List:
                for (const auto& item : o.items) require_bound(item, at);
                break;
            default: break;
        }
    }

    Operand operand(bool allow_issue) {
        const Token& t = peek();
        switch (t.type) {
            case Token::Type::String: return Operand::make_literal(Value(advance().text));
            case Token::Type::Integer: {
                std::int64_t v = 0;
                auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
                if (res.ec != std::errc{}) fail("integer literal out of range");
                advance();
                return Operand::make_literal(Value(v));
            }
            case Token::Type::Float: {
                double v = 0;
                auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
                if (res.ec != std::errc{}) fail("bad float literal");
                advance();
                return Operand::make_literal(Value(v));
            }
            case Token::Type::Var: {
                std::string name = advance().text;
                if (is_punct(".")) {
                    advance();
                    return Operand::make_node_attr(std::move(name), ident("attribute name"));
                }
                return Operand::make_var(std::move(name));
            }
            case Token::Type::Ident: {
                if (t.text == "true" || t.text == "false") {
                    bool b = t.text == "true";
                    advance();
                    return Operand::make_literal(Value(b));
                }
                if (t.text == "issue" && is_punct(".", 1)) {
                    if (!allow_issue) fail("issue attributes are not allowed here");
                    advance();
                    advance();
                    return Operand::make_issue(ident("issue attribute"));
                }
                fail("expected a value" + found());
            }
            case Token::Type::Punct:
                if (t.text == "[") {
                    advance();
                    std::vector<Operand> items;
                    if (!is_punct("]")) {
                        for (;;) {
                            Operand item = operand(allow_issue);
                            if (item.kind == Operand::Kind::List) fail("nested lists are not supported");
                            items.push_back(std::move(item));
                            if (!accept_punct(",")) break;
                        }
                    }
                    expect_punct("]");
                    return Operand::make_list(std::move(items));
                }
                break;
            default: break;
        }
        fail("expected a value" + found());
    }

    MatchClause clause() {
        MatchClause c;
        expect_keyword("match");
        c.entity_type = ident("entity type");
        expect_keyword("as");
        const Token& vt = peek();
        if (vt.type != Token::Type::Var) fail("expected node variable");
        c.var = advance().text;
        if (c.var == "issue") fail_at(KiErrorKind::Syntax, "'issue' is reserved", vt);
        if (is_bound(c.var)) fail_at(KiErrorKind::Syntax, "$" + c.var + " is already bound", vt);
        node_vars_.insert(c.var);
        if (accept_punct("{")) {
            if (!is_punct("}")) {
                for (;;) {
                    c.constraints.push_back(constraint());
                    if (!accept_punct(",")) break;
                }
            }
            expect_punct("}");
        }
        while (is_keyword("related")) {
            advance();
            Relation r;
            expect_keyword("via");
            r.verb = ident("verb");
            if (is_keyword("to")) {
                r.outgoing = true;
            } else if (is_keyword("from")) {
                r.outgoing = false;
            } else {
                fail("expected 'to' or 'from'" + found());
            }
            advance();
            const Token& ot = peek();
            if (ot.type != Token::Type::Var) fail("expected node variable");
            r.other_var = advance().text;
            if (!node_vars_.count(r.other_var) || r.other_var == c.var) {
                fail_at(KiErrorKind::UnboundVariable, "$" + r.other_var + " must be bound by an earlier match clause", ot);
            }
            c.relations.push_back(std::move(r));
        }
        return c;
    }

    Constraint constraint() {
        Constraint k;
        k.attribute = ident("attribute name");
        auto op = op_from(peek());
        if (!op) return k;
        advance();
        k.op = op;
        const Token at = peek();
        k.operand = operand(false);
        if (k.operand.kind == Operand::Kind::Var && !is_bound(k.operand.name)) {
            if (*op != CompareOp::Eq) {
                fail_at(KiErrorKind::UnboundVariable, "$" + k.operand.name + " is not bound (only == binds)", at);
            }
            if (k.operand.name == "issue") fail_at(KiErrorKind::Syntax, "'issue' is reserved", at);
            k.binds = true;
            scalar_vars_.insert(k.operand.name);
        } else {
            require_bound(k.operand, at);
        }
        return k;
    }

    Expr expr() { return or_expr(); }

    Expr or_expr() {
        Expr first = and_expr();
        if (!is_keyword("or")) return first;
        Expr e;
        e.kind = Expr::Kind::Or;
        e.children.push_back(std::move(first));
        while (is_keyword("or")) {
            advance();
            e.children.push_back(and_expr());
        }
        return e;
    }

    Expr and_expr() {
        Expr first = unary();
        if (!is_keyword("and")) return first;
        Expr e;
        e.kind = Expr::Kind::And;
        e.children.push_back(std::move(first));
        while (is_keyword("and")) {
            advance();
            e.children.push_back(unary());
        }
        return e;
    }

    Expr unary() {
        if (is_keyword("not")) {
            advance();
            Expr e;
            e.kind = Expr::Kind::Not;
            e.children.push_back(unary());
            return e;
        }
        return primary();
    }

    Expr primary() {
        if (accept_punct("(")) {
            Expr inner = expr();
            expect_punct(")");
            return inner;
        }
        const Token at = peek();
        Operand lhs = operand(true);
        require_bound(lhs, at);
        Expr e;
        if (auto op = op_from(peek())) {
            advance();
            const Token rt = peek();
            e.kind = Expr::Kind::Compare;
            e.op = *op;
            e.lhs = std::move(lhs);
            e.rhs = operand(true);
            require_bound(e.rhs, rt);
            return e;
        }
        if (is_keyword("exists")) {
            advance();
            if (lhs.kind == Operand::Kind::Literal || lhs.kind == Operand::Kind::List) {
                fail_at(KiErrorKind::Syntax, "'exists' needs an attribute reference", at);
            }
            e.kind = Expr::Kind::Exists;
            e.lhs = std::move(lhs);
            return e;
        }
        if (lhs.kind == Operand::Kind::Literal && lhs.literal == Value(true)) return Expr{};
        e.kind = Expr::Kind::Truthy;
        e.lhs = std::move(lhs);
        return e;
    }

    Statement statement() {
        Statement s;
        const Token head = peek();
        if (is_keyword("issue") && is_punct(".", 1)) {
            advance();
            advance();
            std::string verb = ident("'set' or 'unset'");
            if (verb == "set") {
                s.kind = Statement::Kind::IssueSet;
                s.target = ident("issue attribute");
                expect_punct("=");
                const Token at = peek();
                s.value = operand(true);
                require_bound(s.value, at);
            } else if (verb == "unset") {
                s.kind = Statement::Kind::IssueUnset;
                s.target = ident("issue attribute");
            } else {
                fail_at(KiErrorKind::Syntax, "unknown issue operation '" + verb + "'", head);
            }
            return s;
        }
        if (is_keyword("graph") && is_punct(".", 1)) {
            advance();
            advance();
            if (!is_keyword("set")) fail("expected 'set'" + found());
            advance();
            s.kind = Statement::Kind::GraphSet;
            const Token vt = peek();
            if (vt.type != Token::Type::Var) fail("expected node variable");
            s.target = advance().text;
            if (!node_vars_.count(s.target)) {
                fail_at(KiErrorKind::UnboundVariable, "$" + s.target + " is not a bound node variable", vt);
            }
            expect_punct(".");
            s.attr = ident("attribute name");
            expect_punct("=");
            const Token at = peek();
            s.value = operand(true);
            require_bound(s.value, at);
            return s;
        }
        if (is_keyword("handler")) {
            advance();
            s.kind = Statement::Kind::Handler;
            s.target = ident("handler name");
            const Token tt = peek();
            if (tt.type != Token::Type::String) fail("expected command template string");
            s.command_template = advance().text;
            s.parts = parse_template(s.command_template, tt);
            return s;
        }
        fail("expected 'issue.set', 'issue.unset', 'graph.set' or 'handler'" + found());
    }

    std::vector<TemplatePart> parse_template(const std::string& text, const Token& at) const {
        std::vector<TemplatePart> parts;
        std::string lit;
        std::size_t i = 0;
        while (i < text.size()) {
            if (text[i] == '$' && i + 1 < text.size() && text[i + 1] == '{') {
                std::size_t close = text.find('}', i + 2);
                if (close == std::string::npos) fail_at(KiErrorKind::Syntax, "unterminated '${' in template", at);
                std::string ref = text.substr(i + 2, close - i - 2);
                if (!lit.empty()) {
                    parts.push_back({false, lit, {}});
                    lit.clear();
                }
                TemplatePart p;
                p.is_ref = true;
                auto dot = ref.find('.');
                p.text = ref.substr(0, dot);
                if (dot != std::string::npos) p.attr = ref.substr(dot + 1);
                auto valid_name = [](const std::string& s) {
                    return !s.empty() && ident_start(s[0]) && std::all_of(s.begin(), s.end(), [](char c) { return var_char(c) || c == '-' || c == '/'; });
                };
                if (!valid_name(p.text) || (dot != std::string::npos && !valid_name(p.attr))) {
                    fail_at(KiErrorKind::Syntax, "malformed template reference '${" + ref + "}'", at);
                }
                if (p.text == "issue") {
                    if (p.attr.empty()) fail_at(KiErrorKind::Syntax, "'${issue}' needs an attribute", at);
                } else if (p.attr.empty()) {
                    if (!is_bound(p.text)) fail_at(KiErrorKind::UnboundVariable, "${" + ref + "} is not bound", at);
                } else if (!node_vars_.count(p.text)) {
                    fail_at(KiErrorKind::UnboundVariable, "${" + ref + "} does not name a bound node variable", at);
                }
                parts.push_back(std::move(p));
                i = close + 1;
            } else {
                lit.push_back(text[i]);
                ++i;
            }
        }
        if (!lit.empty()) parts.push_back({false, lit, {}});
        return parts;
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::string source_;
    std::string block_;
    std::set<std::string> node_vars_;
    std::set<std::string> scalar_vars_;
};

}  // namespace

std::vector<KnowledgeItem> parse_rules(std::string_view text, std::string_view source_name) {
    Parser p(Lexer(text, std::string(source_name)).run(), std::string(source_name));
    std::vector<KnowledgeItem> out;
    do {
        out.push_back(p.rule());
    } while (!p.at_end());
    return out;
}

KnowledgeItem parse_ki(std::string_view text, std::string_view source_name) {
    Parser p(Lexer(text, std::string(source_name)).run(), std::string(source_name));
    KnowledgeItem ki = p.rule();
    if (!p.at_end()) throw KiError(KiErrorKind::Syntax, std::string(source_name), "", "trailing input after rule", 0, 0);
    return ki;
}

std::vector<KnowledgeItem> parse_pack(const std::vector<RuleSource>& sources, const std::string& expert_tag) {
    std::vector<KnowledgeItem> out;
    std::set<std::string> names;
    for (const auto& src : sources) {
        for (auto& ki : parse_rules(src.text, src.name)) {
            if (!names.insert(ki.name).second) {
                throw KiError(KiErrorKind::DuplicateName, src.name, "ki", "rule '" + ki.name + "' is defined twice", 0, 0);
            }
            ki.expert_tag = expert_tag;
            out.push_back(std::move(ki));
        }
    }
    return out;
}

std::string expert_tag_for(const std::filesystem::path& dir) {
    std::filesystem::path p = dir;
    if (!p.has_filename()) p = p.parent_path();
    std::string name = p.filename().string();
    return name == "common" ? std::string() : name;
}

std::vector<KnowledgeItem> load_pack(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw ConfigError("rule pack directory not found: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".ki") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<RuleSource> sources;
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        if (!in) throw ConfigError("cannot read " + f.string());
        std::ostringstream buf;
        buf << in.rdbuf();
        sources.push_back({f.string(), buf.str()});
    }
    return parse_pack(sources, expert_tag_for(dir));
}

// ---------------------------------------------------------------------------
// Printer

std::string print_operand(const Operand& o) {
    switch (o.kind) {
        case Operand::Kind::Literal: return o.literal.literal();
        case Operand::Kind::IssueAttr: return "issue." + o.name;
        case Operand::Kind::Var: return "$" + o.name;
        case Operand::Kind::NodeAttr: return "$" + o.name + "." + o.attr;
        case Operand::Kind::List: {
            std::string out = "[";
            for (std::size_t i = 0; i < o.items.size(); ++i) {
                if (i) out += ", ";
                out += print_operand(o.items[i]);
            }
            return out + "]";
        }
    }
    return {};
}

namespace {

std::string print_child(const Expr& e) {
    if (e.kind == Expr::Kind::And || e.kind == Expr::Kind::Or) return "(" + print_expr(e) + ")";
    return print_expr(e);
}

}  // namespace

std::string print_expr(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::True: return "true";
        case Expr::Kind::Compare:
            return print_operand(e.lhs) + " " + std::string(to_string(e.op)) + " " + print_operand(e.rhs);
        case Expr::Kind::Exists: return print_operand(e.lhs) + " exists";
        case Expr::Kind::Truthy: return print_operand(e.lhs);
        case Expr::Kind::Not: return "not " + print_child(e.children.at(0));
        case Expr::Kind::And:
        case Expr::Kind::Or: {
            std::string sep = e.kind == Expr::Kind::And ? " and " : " or ";
            std::string out;
            for (std::size_t i = 0; i < e.children.size(); ++i) {
                if (i) out += sep;
                out += print_child(e.children[i]);
            }
            return out;
        }
    }
    return {};
}

namespace {

bool plain_name(const std::string& s) {
    static const std::set<std::string> reserved = {"ki", "on", "when", "do", "true", "false"};
    if (s.empty() || !ident_start(s[0]) || reserved.count(s)) return false;
    return std::all_of(s.begin(), s.end(), ident_char);
}

}  // namespace

std::string print_ki(const KnowledgeItem& ki) {
    std::string out = "ki " + (plain_name(ki.name) ? ki.name : quote_string(ki.name)) + " {\n";
    for (const auto& [k, v] : ki.meta) out += "  " + k + " = " + v.literal() + "\n";
    out += "}\non {\n";
    for (const auto& c : ki.on) {
        out += "  match " + c.entity_type + " as $" + c.var;
        if (!c.constraints.empty()) {
            out += " { ";
            for (std::size_t i = 0; i < c.constraints.size(); ++i) {
                const auto& k = c.constraints[i];
                if (i) out += ", ";
                out += k.attribute;
                if (k.op) out += " " + std::string(to_string(*k.op)) + " " + print_operand(k.operand);
            }
            out += " }";
        }
        for (const auto& r : c.relations) {
            out += " related via " + r.verb + (r.outgoing ? " to $" : " from $") + r.other_var;
        }
        out += "\n";
    }
    out += "}\nwhen {\n";
    if (ki.when.kind != Expr::Kind::True) out += "  " + print_expr(ki.when) + "\n";
    out += "}\ndo {\n";
    for (const auto& s : ki.actions) {
        switch (s.kind) {
            case Statement::Kind::IssueSet: out += "  issue.set " + s.target + " = " + print_operand(s.value); break;
            case Statement::Kind::IssueUnset: out += "  issue.unset " + s.target; break;
            case Statement::Kind::GraphSet:
                out += "  graph.set $" + s.target + "." + s.attr + " = " + print_operand(s.value);
                break;
            case Statement::Kind::Handler: out += "  handler " + s.target + " " + quote_string(s.command_template); break;
        }
        out += "\n";
    }
    out += "}\n";
    return out;
}

}  // namespace kbrl::ki
