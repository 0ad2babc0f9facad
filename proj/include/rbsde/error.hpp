#pragma once

#include <stdexcept>
#include <string>

namespace rbsde {

/// Error categories; the numeric values double as CLI exit codes.
enum class ErrorKind : int {
    validation = 2,
    nonconvergence = 3,
    budget = 4,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::validation: return "validation";
        case ErrorKind::nonconvergence: return "nonconvergence";
        case ErrorKind::budget: return "budget";
    }
    return "unknown";
}

[[noreturn]] inline void fail_validation(const std::string& msg) {
    throw Error(ErrorKind::validation, msg);
}

}  // namespace rbsde
