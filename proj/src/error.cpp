#include "alert/error.hpp"

namespace alert {

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::kIo: return "io";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kOrdering: return "ordering";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kNumeric: return "numeric";
    }
    return "unknown";
}

} // namespace alert
