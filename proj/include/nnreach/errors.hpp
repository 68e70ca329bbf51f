#pragma once

#include <stdexcept>
#include <string>

namespace nnreach {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed network / polyhedron / config input. Carries the 1-based line
/// (0 when not line-oriented) and the field being parsed.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line, std::string field)
        : Error(format(what, line, field)), line_(line), field_(std::move(field)) {}

    int line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    static std::string format(const std::string& what, int line, const std::string& field) {
        std::string out = "parse error";
        if (line > 0) out += " at line " + std::to_string(line);
        if (!field.empty()) out += " (" + field + ")";
        return out + ": " + what;
    }

    int line_;
    std::string field_;
};

/// Layer shapes that do not chain, or a network used where its shape is invalid.
class StructureError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class LpError : public Error {
public:
    LpError(const std::string& what, long constraint_index = -1)
        : Error(constraint_index >= 0
                    ? what + " (constraint " + std::to_string(constraint_index) + ")"
                    : what),
          index_(constraint_index) {}

    long constraint_index() const noexcept { return index_; }

private:
    long index_;
};

/// A configured size budget (projection constraints, cells, LPs, time) was exceeded.
class BudgetError : public Error {
public:
    using Error::Error;
};

class ContractError : public Error {
public:
    using Error::Error;
};

}  // namespace nnreach
