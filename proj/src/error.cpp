#include "rcakit/error.hpp"

namespace rcakit {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::input: return "input";
    case ErrorKind::capacity: return "capacity";
    case ErrorKind::structure: return "structure";
    case ErrorKind::model: return "model";
    case ErrorKind::degeneracy: return "degeneracy";
    case ErrorKind::sample_size: return "sample-size";
    case ErrorKind::config: return "config";
    case ErrorKind::window: return "window";
    case ErrorKind::format: return "format";
    case ErrorKind::reference: return "reference";
    case ErrorKind::tuning: return "tuning";
    case ErrorKind::timeout: return "timeout";
    }
    return "unknown";
}

}  // namespace rcakit
