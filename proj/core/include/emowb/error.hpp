#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace emowb {

/// Error classes shared by every module. The HTTP layer maps each code to
/// exactly one status, so new failure kinds belong here, not in callers.
enum class ErrorCode {
    not_found,
    conflict,
    invalid_input,
    illegal_transition,
    provider_failure,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, nlohmann::json detail = nullptr)
        : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

    ErrorCode code() const noexcept { return code_; }
    const nlohmann::json& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    nlohmann::json detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message,
                              nlohmann::json detail = nullptr) {
    throw Error(code, message, std::move(detail));
}

}  // namespace emowb
