#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kbrl {

// Base of every error the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Ontology mismatch: unknown entity type, wrong attribute kind, dangling edge.
class SchemaError : public Error {
public:
    using Error::Error;
};

// Malformed input text with a 1-based source position.
class SyntaxError : public Error {
public:
    SyntaxError(const std::string& what, std::size_t line, std::size_t column)
        : Error(what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
          line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

// Runtime type error while evaluating a rule condition.
class EvaluationError : public Error {
public:
    using Error::Error;
};

// A DO program could not be applied; nothing was committed.
class ExecutionError : public Error {
public:
    using Error::Error;
};

// Bad configuration or unusable input files (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace kbrl
