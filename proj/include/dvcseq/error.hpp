#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dvcseq {

enum class ErrorKind {
    invalid_input,
    invalid_token,
    scorer_contract,
    config,
};

inline constexpr std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_input: return "invalid_input";
        case ErrorKind::invalid_token: return "invalid_token";
        case ErrorKind::scorer_contract: return "scorer_contract";
        case ErrorKind::config: return "config";
    }
    return "unknown";
}

// Every library failure is reported through this type; callers switch on kind().
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

}  // namespace dvcseq
