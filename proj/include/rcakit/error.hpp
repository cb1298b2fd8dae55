#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rcakit {

enum class ErrorKind {
    input,
    capacity,
    structure,
    model,
    degeneracy,
    sample_size,
    config,
    window,
    format,
    reference,
    tuning,
    timeout,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a category so the CLI can
/// report it and exit nonzero.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace rcakit
