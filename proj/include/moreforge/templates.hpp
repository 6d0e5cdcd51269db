#pragma once

// One canonical scenario per phenomenon class, parameterised by a small
// class-specific parameter set.

#include <map>
#include <span>
#include <string>
#include <string_view>

#include "moreforge/spec.hpp"

namespace moreforge {

struct ParamInfo {
    std::string_view name;
    double default_value;
    double min;
    double max;
    std::string_view unit; // "m", "m/s", "kg", "deg", "" (dimensionless), ...
    bool integer = false;
};

/// Parameter table of a class, in a fixed order.
std::span<const ParamInfo> template_param_schema(Phenomenon p);

struct TemplateParams {
    Phenomenon phenomenon = Phenomenon::Gravity;
    std::map<std::string, double> values;

    double get(std::string_view name) const;
    bool operator==(const TemplateParams&) const = default;
};

/// Every parameter at its class default.
TemplateParams default_params(Phenomenon p);

/// Throws SchemaError for unknown names, missing parameters or values outside
/// the class range table.
void check_params(const TemplateParams& params);

ScenarioSpec build_template(const TemplateParams& params);
ScenarioSpec build_template(Phenomenon p);

/// Guard for raw integer class ids coming from outside the enum.
ScenarioSpec build_template(int raw_class, const std::map<std::string, double>& values);

/// Fits the render camera to a world rectangle with a 10% margin, keeping the
/// image size; sets world.bounds to the visible rectangle.
void fit_camera(ScenarioSpec& spec, Rect content);

} // namespace moreforge
