#include "moreforge/error.hpp"

namespace moreforge {

std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Syntax: return "SyntaxError";
    case ErrorKind::Schema: return "SchemaError";
    case ErrorKind::ValidationFailed: return "ValidationFailed";
    case ErrorKind::Unclassifiable: return "Unclassifiable";
    case ErrorKind::Contradiction: return "ContradictionError";
    case ErrorKind::Transport: return "TransportError";
    case ErrorKind::Compile: return "CompileError";
    case ErrorKind::UnknownClass: return "UnknownClass";
    case ErrorKind::NumericalDivergence: return "NumericalDivergence";
    case ErrorKind::StrideMismatch: return "StrideMismatch";
    case ErrorKind::SpaceMismatch: return "SpaceMismatch";
    case ErrorKind::DegenerateTraj: return "DegenerateTraj";
    case ErrorKind::MissingObject: return "MissingObject";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::NoProgress: return "NoProgress";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::TelemetryIncomplete: return "TelemetryIncomplete";
    case ErrorKind::Usage: return "UsageError";
    }
    return "UnknownError";
}

int exit_code(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Syntax:
    case ErrorKind::Schema:
    case ErrorKind::ValidationFailed: return 2;
    case ErrorKind::Io: return 3;
    case ErrorKind::TelemetryIncomplete: return 4;
    case ErrorKind::Unclassifiable:
    case ErrorKind::Contradiction: return 5;
    case ErrorKind::SpaceMismatch:
    case ErrorKind::DegenerateTraj:
    case ErrorKind::MissingObject:
    case ErrorKind::EmptyInput: return 6;
    case ErrorKind::NumericalDivergence: return 7;
    case ErrorKind::Transport: return 8;
    case ErrorKind::Compile:
    case ErrorKind::UnknownClass: return 9;
    case ErrorKind::StrideMismatch: return 10;
    case ErrorKind::NoProgress: return 11;
    case ErrorKind::Usage: return 64;
    }
    return 70;
}

std::string Violation::to_string() const
{
    return path + " ∉ " + allowed + " (got " + observed + ")";
}

Error::Error(ErrorKind kind, std::string message, std::string path)
    : std::runtime_error(std::string(moreforge::to_string(kind)) + ": " + message +
                         (path.empty() ? std::string() : " at \"" + path + "\""))
    , kind_(kind)
    , path_(std::move(path))
{
}

} // namespace moreforge
