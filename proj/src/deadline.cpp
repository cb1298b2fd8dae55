#include "rcakit/deadline.hpp"

#include "rcakit/error.hpp"

namespace rcakit {

namespace {
thread_local std::optional<Clock::time_point> current_deadline;
}

ScopedDeadline::ScopedDeadline(std::optional<Clock::time_point> deadline)
    : previous_(current_deadline) {
    if (deadline && (!current_deadline || *deadline < *current_deadline)) {
        current_deadline = deadline;
    }
}

ScopedDeadline::~ScopedDeadline() { current_deadline = previous_; }

void check_deadline() {
    if (current_deadline && Clock::now() > *current_deadline) {
        fail(ErrorKind::timeout, "deadline exceeded");
    }
}

}  // namespace rcakit
