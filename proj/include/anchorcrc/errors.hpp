#pragma once

#include <stdexcept>
#include <string>

namespace anchorcrc {

/// Malformed or inconsistent user-supplied data (files, flags, configs).
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// The observed counts cannot identify a required parameter. The condition
/// string names the failing cell constraint, e.g. "n1+n3=0".
class IdentifiabilityError : public std::runtime_error {
public:
    IdentifiabilityError(std::string condition, const std::string& detail)
        : std::runtime_error(condition + ": " + detail), condition_(std::move(condition)) {}

    const std::string& condition() const noexcept { return condition_; }

private:
    std::string condition_;
};

/// A violated internal invariant; indicates a bug, not bad input.
class InternalError : public std::logic_error {
public:
    explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

} // namespace anchorcrc
