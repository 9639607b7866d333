#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace lc {

/// Precondition or argument-domain failure.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input geometry too degenerate for the requested fit (collinear, too few cells).
class DegenerateInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A black-box callback broke its contract (e.g. varying output length).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// RenderScene invariant failure.
class InvalidScene : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed encoded depth/segment bytes; carries the offending byte offset.
class DecodeError : public std::runtime_error {
public:
    DecodeError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

struct ValidationIssue {
    std::string pointer;  // JSON pointer, e.g. "/boxes/0/half_extents"
    std::string message;
};

/// Scene validation failure listing every violation found.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<ValidationIssue> issues)
        : std::runtime_error(format(issues)), issues_(std::move(issues)) {}

    const std::vector<ValidationIssue>& issues() const noexcept { return issues_; }

private:
    static std::string format(const std::vector<ValidationIssue>& issues) {
        std::string out = "scene validation failed:";
        for (const auto& i : issues) out += " " + i.pointer + ": " + i.message + ";";
        return out;
    }

    std::vector<ValidationIssue> issues_;
};

}  // namespace lc
