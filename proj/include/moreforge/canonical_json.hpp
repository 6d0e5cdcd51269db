#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace moreforge {

using Json = nlohmann::json;

/// Formats a double with at most 9 significant digits, shortest form
/// ("9.81", not "9.81000000"). Integral values print without a fraction.
std::string format_number(double value);

/// Rounds to the value that format_number prints.
double quantize(double value);

/// Canonical JSON: object keys sorted bytewise, floats via format_number,
/// two-space indentation, trailing LF. Byte-stable for equal inputs.
std::string canonical_dump(const Json& value);

} // namespace moreforge
