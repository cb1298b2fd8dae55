#pragma once

#include <chrono>
#include <optional>

namespace rcakit {

using Clock = std::chrono::steady_clock;

/// Installs a per-thread deadline for the lifetime of the object. Long-running
/// algorithms call check_deadline() from their outer loops and abort with
/// ErrorKind::timeout once it has passed.
class ScopedDeadline {
public:
    explicit ScopedDeadline(std::optional<Clock::time_point> deadline);
    ~ScopedDeadline();
    ScopedDeadline(const ScopedDeadline&) = delete;
    ScopedDeadline& operator=(const ScopedDeadline&) = delete;

private:
    std::optional<Clock::time_point> previous_;
};

void check_deadline();

}  // namespace rcakit
