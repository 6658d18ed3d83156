#pragma once

#include <stdexcept>
#include <string>

namespace seqclf {

enum class ErrorKind {
    invalid_action,
    dimension,
    terminal_state,
    invalid_dataset,
    parse,
    invalid_argument,
    numerical_failure,
    cache_invalid,
    out_of_range,
    io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so the
/// CLI can map it onto an exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

} // namespace seqclf
