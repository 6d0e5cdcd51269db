#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace moreforge {

enum class ErrorKind {
    Syntax,
    Schema,
    ValidationFailed,
    Unclassifiable,
    Contradiction,
    Transport,
    Compile,
    UnknownClass,
    NumericalDivergence,
    StrideMismatch,
    SpaceMismatch,
    DegenerateTraj,
    MissingObject,
    EmptyInput,
    NoProgress,
    Io,
    TelemetryIncomplete,
    Usage,
};

std::string_view to_string(ErrorKind kind);

/// Process exit code for each error kind. The table is documented in the README
/// and every kind maps to exactly one code.
int exit_code(ErrorKind kind);

struct Violation {
    std::string path;
    std::string observed;
    std::string allowed;

    std::string to_string() const;
    bool operator==(const Violation&) const = default;
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message, std::string path = {});

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& path() const noexcept { return path_; }

    std::vector<Violation> violations;
    long step = -1;

private:
    ErrorKind kind_;
    std::string path_;
};

} // namespace moreforge
