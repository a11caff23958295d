#pragma once

#include <stdexcept>
#include <string>

namespace nhbraid {

enum class ErrorFamily { Config, Numerics, Protocol, Classification, IO };

/// Process exit code associated with an error family (0 is reserved for success).
inline int exit_code(ErrorFamily f) {
    switch (f) {
        case ErrorFamily::Config: return 2;
        case ErrorFamily::Numerics: return 3;
        case ErrorFamily::Protocol: return 4;
        case ErrorFamily::Classification: return 5;
        case ErrorFamily::IO: return 6;
    }
    return 1;
}

inline const char* family_name(ErrorFamily f) {
    switch (f) {
        case ErrorFamily::Config: return "config";
        case ErrorFamily::Numerics: return "numerics";
        case ErrorFamily::Protocol: return "protocol";
        case ErrorFamily::Classification: return "classification";
        case ErrorFamily::IO: return "io";
    }
    return "unknown";
}

/// Base error carrying a stable short kind tag (e.g. "NonConvergence") and its family.
class Error : public std::runtime_error {
public:
    Error(ErrorFamily family, std::string kind, const std::string& detail)
        : std::runtime_error(kind + ": " + detail), family_(family), kind_(std::move(kind)), detail_(detail) {}

    ErrorFamily family() const noexcept { return family_; }
    const std::string& kind() const noexcept { return kind_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorFamily family_;
    std::string kind_;
    std::string detail_;
};

inline Error numerics_error(const std::string& kind, const std::string& detail) {
    return Error(ErrorFamily::Numerics, kind, detail);
}
inline Error protocol_error(const std::string& kind, const std::string& detail) {
    return Error(ErrorFamily::Protocol, kind, detail);
}
inline Error config_error(const std::string& kind, const std::string& detail) {
    return Error(ErrorFamily::Config, kind, detail);
}
inline Error classification_error(const std::string& kind, const std::string& detail) {
    return Error(ErrorFamily::Classification, kind, detail);
}
inline Error io_error(const std::string& kind, const std::string& detail) { return Error(ErrorFamily::IO, kind, detail); }

}  // namespace nhbraid
