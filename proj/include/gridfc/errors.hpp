#pragma once

#include <stdexcept>
#include <string>

namespace gridfc {

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error("parse error: " + what) {}
};

struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& what) : std::runtime_error("validation error: " + what) {}
};

struct InfeasibleError : std::runtime_error {
    explicit InfeasibleError(const std::string& what) : std::runtime_error("infeasible: " + what) {}
};

struct InvalidActionError : std::runtime_error {
    explicit InvalidActionError(const std::string& what) : std::runtime_error("invalid action: " + what) {}
};

struct NoAvailableActionError : std::runtime_error {
    explicit NoAvailableActionError(const std::string& what) : std::runtime_error("no available action: " + what) {}
};

struct InsufficientBufferError : std::runtime_error {
    explicit InsufficientBufferError(const std::string& what) : std::runtime_error("insufficient buffer: " + what) {}
};

struct SingularSystemError : std::runtime_error {
    explicit SingularSystemError(const std::string& what) : std::runtime_error("singular system: " + what) {}
};

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& what) : std::runtime_error("shape mismatch: " + what) {}
};

struct ReportError : std::runtime_error {
    explicit ReportError(const std::string& what) : std::runtime_error("report error: " + what) {}
};

}  // namespace gridfc
