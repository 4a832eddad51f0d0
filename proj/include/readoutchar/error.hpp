// Copyright 2026 The readoutchar Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace readout {

// Machine-readable failure reasons. The string form is what lands in report
// files and wire error objects.
enum class ErrorCode {
    invalid_argument,
    resolution_guard,
    degenerate_separation,
    undefined_snr,
    degenerate_fit,
    overdrive,
    no_signal,
    no_information,
    power_advisory,
    missing_dependency,
    schema_violation,
    protocol_error,
    backend_unavailable,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::resolution_guard: return "resolution_guard";
        case ErrorCode::degenerate_separation: return "degenerate_separation";
        case ErrorCode::undefined_snr: return "undefined_snr";
        case ErrorCode::degenerate_fit: return "degenerate_fit";
        case ErrorCode::overdrive: return "overdrive";
        case ErrorCode::no_signal: return "no_signal";
        case ErrorCode::no_information: return "no_information";
        case ErrorCode::power_advisory: return "power_advisory";
        case ErrorCode::missing_dependency: return "missing_dependency";
        case ErrorCode::schema_violation: return "schema_violation";
        case ErrorCode::protocol_error: return "protocol_error";
        case ErrorCode::backend_unavailable: return "backend_unavailable";
    }
    return "unknown";
}

inline std::optional<ErrorCode> error_code_from(std::string_view name) {
    for (int i = 0; i <= static_cast<int>(ErrorCode::backend_unavailable); ++i) {
        if (to_string(static_cast<ErrorCode>(i)) == name) {
            return static_cast<ErrorCode>(i);
        }
    }
    return std::nullopt;
}

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string &message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {
    }

    ErrorCode code() const noexcept {
        return code_;
    }
    std::string_view reason() const noexcept {
        return to_string(code_);
    }
    const std::string &detail() const noexcept {
        return detail_;
    }

  private:
    ErrorCode code_;
    std::string detail_;
};

inline void require(bool condition, ErrorCode code, const std::string &message) {
    if (!condition) {
        throw Error(code, message);
    }
}

}  // namespace readout
