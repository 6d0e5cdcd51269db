#include "moreforge/canonical_json.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace moreforge {

std::string format_number(double value)
{
    if (value == 0.0) {
        return "0";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

double quantize(double value)
{
    return std::strtod(format_number(value).c_str(), nullptr);
}

namespace {

void escape_into(std::string& out, const std::string& s)
{
    // nlohmann's dump() handles UTF-8 validation and escaping of a lone string.
    out += Json(s).dump();
}

void dump_into(std::string& out, const Json& value, int indent)
{
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
    switch (value.type()) {
    case Json::value_t::object: {
        if (value.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        bool first = true;
        // nlohmann::json stores objects in std::map, so iteration is key-sorted.
        for (auto it = value.begin(); it != value.end(); ++it) {
            if (!first) {
                out += ",\n";
            }
            first = false;
            out += inner;
            escape_into(out, it.key());
            out += ": ";
            dump_into(out, it.value(), indent + 1);
        }
        out += "\n" + pad + "}";
        return;
    }
    case Json::value_t::array: {
        if (value.empty()) {
            out += "[]";
            return;
        }
        bool scalar_only = true;
        for (const auto& v : value) {
            if (v.is_structured()) {
                scalar_only = false;
                break;
            }
        }
        if (scalar_only) {
            out += "[";
            for (std::size_t i = 0; i < value.size(); ++i) {
                if (i) {
                    out += ", ";
                }
                dump_into(out, value[i], indent + 1);
            }
            out += "]";
            return;
        }
        out += "[\n";
        for (std::size_t i = 0; i < value.size(); ++i) {
            if (i) {
                out += ",\n";
            }
            out += inner;
            dump_into(out, value[i], indent + 1);
        }
        out += "\n" + pad + "]";
        return;
    }
    case Json::value_t::number_float:
        out += format_number(value.get<double>());
        return;
    case Json::value_t::string:
        escape_into(out, value.get_ref<const std::string&>());
        return;
    default:
        out += value.dump();
        return;
    }
}

} // namespace

std::string canonical_dump(const Json& value)
{
    std::string out;
    dump_into(out, value, 0);
    out += "\n";
    return out;
}

} // namespace moreforge
