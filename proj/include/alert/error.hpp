#pragma once

#include <stdexcept>
#include <string>

namespace alert {

enum class ErrorKind {
    kIo,
    kFormat,
    kValidation,
    kOrdering,
    kConfig,
    kNumeric,
};

const char* error_kind_name(ErrorKind kind);

/// Base error carrying a machine-readable category alongside the message.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

struct IoError : Error {
    explicit IoError(const std::string& m) : Error(ErrorKind::kIo, m) {}
};

struct FormatError : Error {
    explicit FormatError(const std::string& m) : Error(ErrorKind::kFormat, m) {}
};

struct ValidationError : Error {
    explicit ValidationError(const std::string& m) : Error(ErrorKind::kValidation, m) {}
};

struct OrderingError : Error {
    explicit OrderingError(const std::string& m) : Error(ErrorKind::kOrdering, m) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error(ErrorKind::kConfig, m) {}
};

struct NumericError : Error {
    explicit NumericError(const std::string& m) : Error(ErrorKind::kNumeric, m) {}
};

} // namespace alert
