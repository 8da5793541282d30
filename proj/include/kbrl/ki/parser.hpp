#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "kbrl/error.hpp"
#include "kbrl/ki/ast.hpp"

namespace kbrl::ki {

enum class KiErrorKind { Syntax, UnboundVariable, EmptyDo, MissingOn, DuplicateName };

std::string_view to_string(KiErrorKind kind);

// Parse failure located by source name, block ("ki", "on", "when", "do") and position.
class KiError : public SyntaxError {
public:
    KiError(KiErrorKind kind, std::string source, std::string block, const std::string& message, std::size_t line,
            std::size_t column);

    KiErrorKind kind() const noexcept { return kind_; }
    const std::string& source() const noexcept { return source_; }
    const std::string& block() const noexcept { return block_; }

private:
    KiErrorKind kind_;
    std::string source_;
    std::string block_;
};

struct RuleSource {
    std::string name;  // file name used in error messages
    std::string text;
};

// Parses exactly one rule.
KnowledgeItem parse_ki(std::string_view text, std::string_view source_name = "<input>");
// Parses every rule in a file (at least one).
std::vector<KnowledgeItem> parse_rules(std::string_view text, std::string_view source_name = "<input>");

// Parses all sources, tags every rule, and rejects duplicate names within the pack.
std::vector<KnowledgeItem> parse_pack(const std::vector<RuleSource>& sources, const std::string& expert_tag);

// Expert tag for a pack directory: its name, except that "common" maps to "".
std::string expert_tag_for(const std::filesystem::path& dir);
// Loads every *.ki file of the directory in file-name order.
std::vector<KnowledgeItem> load_pack(const std::filesystem::path& dir);

// Canonical text; parse_ki(print_ki(k)) == k for every valid rule.
std::string print_ki(const KnowledgeItem& ki);
std::string print_expr(const Expr& expr);
std::string print_operand(const Operand& operand);

}  // namespace kbrl::ki
