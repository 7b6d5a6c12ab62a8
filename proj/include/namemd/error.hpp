#pragma once

#include <stdexcept>
#include <string>

namespace namemd {

/// Exception carrying a short machine-readable code alongside the message.
/// The CLI prints both on one line.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

namespace detail {

[[noreturn]] inline void fail(const char* code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool cond, const char* code, const std::string& message) {
    if (!cond) fail(code, message);
}

}  // namespace detail
}  // namespace namemd
